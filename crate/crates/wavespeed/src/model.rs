//! Spatial ODE systems for traveling-wave profiles.
//!
//! In the comoving variable `xi = x - c t` the inviscid problem reduces to a
//! planar system for `(T, U)` on the zero level set of its conserved
//! quantity, and the viscous problem to a three-dimensional system for
//! `(T, U, V)` where `V = cT + T' - UT` is the temperature flux. This module
//! holds those vector fields, the four-dimensional system that additionally
//! carries the velocity flux `W`, the equilibria, the conserved quantities,
//! and the local eigenvalue analysis used to seed shooting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::VectorField;

/// Errors from model-level evaluations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    /// Parameter outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The inviscid velocity equation divides by `U - c`.
    #[error("singular vector field: |U - c| = {gap:.3e} below guard {guard:.3e}")]
    Singular { gap: f64, guard: f64 },
    /// The eigenvalue solve did not produce a usable answer.
    #[error("eigen solve failure: {0}")]
    EigenFailure(String),
}

pub type ModelResult<T> = Result<T, ModelError>;

/// Guard radius for the `U -> c` singularity of the planar system.
///
/// Valid orbits in the box satisfy `U <= u0 < c`, so the guard only trips on
/// erroneous orbits or deliberate shots at the high equilibrium.
pub fn singularity_guard(c: f64) -> f64 {
    1e-10 * c.max(1.0)
}

/// Physical parameters of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Viscosity `nu >= 0` of the velocity equation.
    pub nu: f64,
    /// Coupling strength `rho > 0` of the buoyancy forcing.
    pub rho: f64,
}

impl SystemParams {
    pub fn new(nu: f64, rho: f64) -> ModelResult<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(ModelError::Domain(format!("nu must be finite and >= 0, got {nu}")));
        }
        if !rho.is_finite() || rho <= 0.0 {
            return Err(ModelError::Domain(format!("rho must be finite and > 0, got {rho}")));
        }
        Ok(Self { nu, rho })
    }

    /// True when the velocity equation carries no diffusion.
    pub fn is_inviscid(&self) -> bool {
        self.nu == 0.0
    }
}

/// System parameters plus a candidate wave speed and its derived left state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub params: SystemParams,
    /// Candidate wave speed `c > 0`.
    pub c: f64,
    /// Left rest state `u0 = c + rho - sqrt(c^2 + rho^2)`, stored once.
    pub u0: f64,
}

impl WaveParams {
    pub fn new(params: SystemParams, c: f64) -> ModelResult<Self> {
        let u0 = equilibrium_u0(c, params.rho)?;
        let w = Self { params, c, u0 };
        w.validate()?;
        Ok(w)
    }

    /// Re-derives `u0` from the defining expression and checks agreement to
    /// a few units in the last place of the intermediates, plus the strict
    /// ordering `0 < u0 < min(c, rho)`.
    pub fn validate(&self) -> ModelResult<()> {
        let (c, rho) = (self.c, self.params.rho);
        let root = (c * c + rho * rho).sqrt();
        let naive = c + rho - root;
        let allowance = 4.0 * f64::EPSILON * (c + rho + root);
        if (self.u0 - naive).abs() > allowance {
            return Err(ModelError::Domain(format!(
                "stored u0 = {} disagrees with c + rho - sqrt(c^2 + rho^2) = {naive}",
                self.u0
            )));
        }
        if !(self.u0 > 0.0 && self.u0 < self.c.min(self.params.rho)) {
            return Err(ModelError::Domain(format!(
                "u0 = {} outside (0, min(c, rho)) for c = {c}, rho = {rho}",
                self.u0
            )));
        }
        Ok(())
    }

    /// `c - u0 = sqrt(c^2 + rho^2) - rho`, evaluated without cancellation.
    pub fn c_minus_u0(&self) -> f64 {
        let (c, rho) = (self.c, self.params.rho);
        c * c / (rho + (c * c + rho * rho).sqrt())
    }

    pub fn nu(&self) -> f64 {
        self.params.nu
    }

    pub fn rho(&self) -> f64 {
        self.params.rho
    }

    /// Left equilibrium of the planar system, `(1, u0)`.
    pub fn planar_equilibrium(&self) -> PlanarState {
        PlanarState { t: 1.0, u: self.u0 }
    }

    /// Left equilibrium of the three-dimensional system, `(1, u0, c - u0)`.
    pub fn viscous_equilibrium(&self) -> ViscousState {
        ViscousState { t: 1.0, u: self.u0, v: self.c_minus_u0() }
    }
}

/// Point of the planar phase space: temperature `T` and velocity `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub t: f64,
    pub u: f64,
}

/// Point of the three-dimensional phase space: `T`, `U`, and the
/// temperature flux `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscousState {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Point of the four-dimensional phase space carrying both fluxes; along any
/// orbit `rho V - W` is conserved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullViscousState {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl From<[f64; 2]> for PlanarState {
    fn from(y: [f64; 2]) -> Self {
        Self { t: y[0], u: y[1] }
    }
}

impl From<PlanarState> for [f64; 2] {
    fn from(s: PlanarState) -> Self {
        [s.t, s.u]
    }
}

impl From<[f64; 3]> for ViscousState {
    fn from(y: [f64; 3]) -> Self {
        Self { t: y[0], u: y[1], v: y[2] }
    }
}

impl From<ViscousState> for [f64; 3] {
    fn from(s: ViscousState) -> Self {
        [s.t, s.u, s.v]
    }
}

impl From<[f64; 4]> for FullViscousState {
    fn from(y: [f64; 4]) -> Self {
        Self { t: y[0], u: y[1], v: y[2], w: y[3] }
    }
}

impl From<FullViscousState> for [f64; 4] {
    fn from(s: FullViscousState) -> Self {
        [s.t, s.u, s.v, s.w]
    }
}

/// Low left rest state `u0 = c + rho - sqrt(c^2 + rho^2)`.
///
/// Evaluated as `2 c rho / (c + rho + sqrt(c^2 + rho^2))` so that no digits
/// are lost when `rho << c` or `c << rho`; the direct form cancels
/// catastrophically at extreme ratios.
///
/// ```
/// let u0 = wavespeed::model::equilibrium_u0(2.0, 1.0).unwrap();
/// assert!((u0 - (3.0 - 5.0_f64.sqrt())).abs() < 1e-14);
/// ```
pub fn equilibrium_u0(c: f64, rho: f64) -> ModelResult<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(ModelError::Domain(format!("wave speed c must be > 0, got {c}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(ModelError::Domain(format!("rho must be > 0, got {rho}")));
    }
    Ok(2.0 * c * rho / (c + rho + (c * c + rho * rho).sqrt()))
}

/// High rest state `c + rho + sqrt(c^2 + rho^2)`; no wave connects it to the
/// origin, but its unstable manifold is shot to confirm the dichotomy.
pub fn high_equilibrium(c: f64, rho: f64) -> f64 {
    c + rho + (c * c + rho * rho).sqrt()
}

/// Right-hand side of the planar system on the zero level set of the
/// conserved quantity:
///
/// ```text
///   T' = -cT + UT + (U / 2 rho)(2c - U),
///   U' = rho T(1 - T) / (U - c).
/// ```
pub fn planar_field(s: &PlanarState, w: &WaveParams) -> ModelResult<PlanarState> {
    let (c, rho) = (w.c, w.rho());
    let gap = (s.u - c).abs();
    let guard = singularity_guard(c);
    if gap < guard {
        return Err(ModelError::Singular { gap, guard });
    }
    Ok(PlanarState {
        t: -c * s.t + s.u * s.t + s.u / (2.0 * rho) * (2.0 * c - s.u),
        u: rho / (s.u - c) * s.t * (1.0 - s.t),
    })
}

/// Right-hand side of the three-dimensional viscous system:
///
/// ```text
///   T' = -cT + UT + V,
///   U' = (-cU + U^2/2 + rho V) / nu,
///   V' = T(T - 1).
/// ```
pub fn viscous_field(s: &ViscousState, w: &WaveParams) -> ModelResult<ViscousState> {
    let nu = w.nu();
    if nu <= 0.0 {
        return Err(ModelError::Domain(
            "viscous field requires nu > 0; use planar_field for nu = 0".into(),
        ));
    }
    let (c, rho) = (w.c, w.rho());
    Ok(ViscousState {
        t: -c * s.t + s.u * s.t + s.v,
        u: (-c * s.u + 0.5 * s.u * s.u + rho * s.v) / nu,
        v: s.t * (s.t - 1.0),
    })
}

/// Inviscid system with the temperature flux kept as a state, used to test
/// conservation of `U^2/2 - cU + rho V` under integration:
///
/// ```text
///   T' = -cT + UT + V,
///   U' = rho T(1 - T) / (U - c),
///   V' = T(T - 1).
/// ```
pub fn inviscid_flux_field(s: &ViscousState, w: &WaveParams) -> ModelResult<ViscousState> {
    let (c, rho) = (w.c, w.rho());
    let gap = (s.u - c).abs();
    let guard = singularity_guard(c);
    if gap < guard {
        return Err(ModelError::Singular { gap, guard });
    }
    Ok(ViscousState {
        t: -c * s.t + s.u * s.t + s.v,
        u: rho / (s.u - c) * s.t * (1.0 - s.t),
        v: s.t * (s.t - 1.0),
    })
}

/// Four-dimensional viscous system carrying both fluxes; `rho V - W` is
/// constant along orbits:
///
/// ```text
///   T' = -cT + UT + V,
///   U' = (-cU + U^2/2 + W) / nu,
///   V' = T(T - 1),
///   W' = rho T(T - 1).
/// ```
pub fn full_viscous_field(s: &FullViscousState, w: &WaveParams) -> ModelResult<FullViscousState> {
    let nu = w.nu();
    if nu <= 0.0 {
        return Err(ModelError::Domain("full viscous field requires nu > 0".into()));
    }
    let (c, rho) = (w.c, w.rho());
    Ok(FullViscousState {
        t: -c * s.t + s.u * s.t + s.v,
        u: (-c * s.u + 0.5 * s.u * s.u + s.w) / nu,
        v: s.t * (s.t - 1.0),
        w: rho * s.t * (s.t - 1.0),
    })
}

/// Conserved quantity `U^2/2 - cU + rho V` of the inviscid flux system.
pub fn conserved_planar(u: f64, v: f64, c: f64, rho: f64) -> f64 {
    0.5 * u * u - c * u + rho * v
}

/// Conserved quantity `rho V - W` of the four-dimensional system.
pub fn conserved_full(v: f64, w: f64, rho: f64) -> f64 {
    rho * v - w
}

/// Flux value on the zero level set: `V = (U / 2 rho)(2c - U)`.
pub fn reduce_v(u: f64, c: f64, rho: f64) -> f64 {
    u / (2.0 * rho) * (2.0 * c - u)
}

/// Eigenstructure at an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    /// All eigenvalues of the linearization.
    pub eigenvalues: Vec<Complex64>,
    /// Unit tangent of the unstable manifold, sign chosen so the
    /// temperature component is negative (pointing into the box/cube);
    /// `None` when no direction is unstable.
    pub unstable_direction: Option<Vec<f64>>,
    /// Number of eigenvalues with positive real part.
    pub unstable_count: usize,
}

/// Linearization of the planar system at the origin: eigenvalues are the
/// roots of `lambda^2 + c lambda + 1 = 0`, a complex pair for `c < 2` and a
/// real negative pair for `c >= 2`.
pub fn eigen_planar_origin(c: f64) -> ModelResult<EigenData> {
    if !(c > 0.0) {
        return Err(ModelError::Domain(format!("c must be > 0, got {c}")));
    }
    Ok(EigenData {
        eigenvalues: quadratic_roots(c, 1.0).to_vec(),
        unstable_direction: None,
        unstable_count: 0,
    })
}

/// Linearization of the three-dimensional system at the origin: the planar
/// quadratic pair together with the velocity-diffusion eigenvalue `-c / nu`.
pub fn eigen_viscous_origin(c: f64, nu: f64) -> ModelResult<EigenData> {
    if !(c > 0.0) || !(nu > 0.0) {
        return Err(ModelError::Domain(format!("need c > 0 and nu > 0, got c = {c}, nu = {nu}")));
    }
    let mut eigenvalues = quadratic_roots(c, 1.0).to_vec();
    eigenvalues.push(Complex64::new(-c / nu, 0.0));
    Ok(EigenData { eigenvalues, unstable_direction: None, unstable_count: 0 })
}

/// Roots of `lambda^2 + b lambda + g = 0`.
fn quadratic_roots(b: f64, g: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * g;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // Stable form: compute the larger-magnitude root first.
        let q = -0.5 * (b + b.signum() * root);
        let r1 = q;
        let r2 = if q != 0.0 { g / q } else { -b - q };
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let im = (-disc).sqrt() * 0.5;
        let re = -0.5 * b;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Linearization of the planar system at an equilibrium `(1, u_eq)` where
/// `u_eq` is either rest state. Saddle for the low state; the unstable
/// direction is normalized with negative temperature component.
pub fn eigen_planar_equilibrium(c: f64, rho: f64, u_eq: f64) -> ModelResult<EigenData> {
    if (u_eq - c).abs() < singularity_guard(c) {
        return Err(ModelError::Domain("equilibrium velocity coincides with c".into()));
    }
    // Jacobian [[u_eq - c, 1 + (c - u_eq)/rho], [rho/(c - u_eq), 0]].
    let a11 = u_eq - c;
    let a12 = 1.0 + (c - u_eq) / rho;
    let a21 = rho / (c - u_eq);
    let tr = a11;
    let det = -a12 * a21;
    let roots = quadratic_roots(-tr, det);
    let unstable: Vec<Complex64> =
        roots.iter().copied().filter(|l| l.re > 0.0).collect();
    let unstable_count = unstable.len();
    let unstable_direction = if unstable_count == 1 {
        let lambda = unstable[0].re;
        // Second Jacobian row: a21 vT - lambda vU = 0.
        let mut v = [1.0, a21 / lambda];
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let sign = if v[0] > 0.0 { -1.0 } else { 1.0 };
        v[0] *= sign / norm;
        v[1] *= sign / norm;
        Some(v.to_vec())
    } else {
        None
    };
    Ok(EigenData { eigenvalues: roots.to_vec(), unstable_direction, unstable_count })
}

/// Coefficients `(a2, a1, a0)` of the monic characteristic cubic of the
/// three-dimensional linearization at `(1, u0, c - u0)`:
///
/// ```text
///   g(lambda) = lambda^3 + ((c - u0)(1 + nu)/nu) lambda^2
///             + (((c - u0)^2 - nu)/nu) lambda + (u0 - c - rho)/nu.
/// ```
pub fn characteristic_cubic(w: &WaveParams) -> (f64, f64, f64) {
    let nu = w.nu();
    let rho = w.rho();
    let d = w.c_minus_u0();
    ((d * (1.0 + nu)) / nu, (d * d - nu) / nu, (-d - rho) / nu)
}

/// Eigenstructure of the left equilibrium: the planar Jacobian at `(1, u0)`
/// for `nu = 0`, the characteristic cubic of the three-dimensional
/// linearization for `nu > 0`. Exactly one eigenvalue has positive real
/// part for all valid parameters.
pub fn eigen_left_equilibrium(w: &WaveParams) -> ModelResult<EigenData> {
    if w.params.is_inviscid() {
        let data = eigen_planar_equilibrium(w.c, w.rho(), w.u0)?;
        if data.unstable_count != 1 {
            return Err(ModelError::EigenFailure(format!(
                "expected a one-dimensional unstable manifold at (1, u0), found {}",
                data.unstable_count
            )));
        }
        return Ok(data);
    }
    let (a2, a1, a0) = characteristic_cubic(w);
    let roots = solve_cubic(a2, a1, a0);
    let scale = a2.abs().max(a1.abs()).max(a0.abs()).max(1.0);
    for r in &roots {
        let res = ((*r + a2) * *r + a1) * *r + a0;
        if res.norm() > 1e-9 * scale {
            return Err(ModelError::EigenFailure(format!(
                "cubic residual {:.3e} exceeds tolerance at root {r}",
                res.norm()
            )));
        }
    }
    let unstable: Vec<Complex64> = roots.iter().copied().filter(|l| l.re > 0.0).collect();
    if unstable.len() != 1 || unstable[0].im != 0.0 {
        return Err(ModelError::EigenFailure(format!(
            "expected one real positive eigenvalue, got {roots:?}"
        )));
    }
    let lambda = unstable[0].re;
    // Eigenvector from the matrix structure: vT = lambda vV,
    // vU = rho vV / (nu lambda + c - u0); all components share a sign.
    let d = w.c_minus_u0();
    let mut v = [lambda, w.rho() / (w.nu() * lambda + d), 1.0];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    for x in &mut v {
        *x *= -1.0 / norm;
    }
    Ok(EigenData {
        eigenvalues: roots.to_vec(),
        unstable_direction: Some(v.to_vec()),
        unstable_count: 1,
    })
}

/// Roots of the monic cubic `x^3 + a2 x^2 + a1 x + a0`, by the depressed
/// closed form with a Newton polish pass on each root.
pub fn solve_cubic(a2: f64, a1: f64, a0: f64) -> [Complex64; 3] {
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-0.5 * q + s).cbrt();
        let v = (-0.5 * q - s).cbrt();
        let re = -0.5 * (u + v);
        let im = 0.5 * 3.0f64.sqrt() * (u - v);
        [
            Complex64::new(u + v, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else {
        // Three real roots; trigonometric form.
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let theta = arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        [
            Complex64::new(m * theta.cos(), 0.0),
            Complex64::new(m * (theta - two_pi_3).cos(), 0.0),
            Complex64::new(m * (theta + two_pi_3).cos(), 0.0),
        ]
    };
    for r in &mut roots {
        *r -= shift;
        for _ in 0..4 {
            let f = ((*r + a2) * *r + a1) * *r + a0;
            let df = (3.0 * *r + 2.0 * a2) * *r + a1;
            if df.norm() < 1e-300 {
                break;
            }
            let step = f / df;
            *r -= step;
            if step.norm() < 1e-15 * r.norm().max(1.0) {
                break;
            }
        }
        // Real roots perturbed into the complex plane by polish noise snap back.
        if r.im.abs() < 1e-13 * r.re.abs().max(1.0) {
            r.im = 0.0;
        }
    }
    roots
}

/// Planar system as an integrable vector field.
#[derive(Debug, Clone, Copy)]
pub struct PlanarSystem(pub WaveParams);

impl VectorField<2> for PlanarSystem {
    fn eval(&self, y: &[f64; 2]) -> ModelResult<[f64; 2]> {
        planar_field(&PlanarState::from(*y), &self.0).map(Into::into)
    }
    fn wave_speed(&self) -> Option<f64> {
        Some(self.0.c)
    }
}

/// Three-dimensional viscous system as an integrable vector field.
#[derive(Debug, Clone, Copy)]
pub struct ViscousSystem(pub WaveParams);

impl VectorField<3> for ViscousSystem {
    fn eval(&self, y: &[f64; 3]) -> ModelResult<[f64; 3]> {
        viscous_field(&ViscousState::from(*y), &self.0).map(Into::into)
    }
    fn wave_speed(&self) -> Option<f64> {
        Some(self.0.c)
    }
}

/// Inviscid system with dynamical flux as an integrable vector field.
#[derive(Debug, Clone, Copy)]
pub struct InviscidFluxSystem(pub WaveParams);

impl VectorField<3> for InviscidFluxSystem {
    fn eval(&self, y: &[f64; 3]) -> ModelResult<[f64; 3]> {
        inviscid_flux_field(&ViscousState::from(*y), &self.0).map(Into::into)
    }
    fn wave_speed(&self) -> Option<f64> {
        Some(self.0.c)
    }
}

/// Four-dimensional viscous system as an integrable vector field.
#[derive(Debug, Clone, Copy)]
pub struct FullViscousSystem(pub WaveParams);

impl VectorField<4> for FullViscousSystem {
    fn eval(&self, y: &[f64; 4]) -> ModelResult<[f64; 4]> {
        full_viscous_field(&FullViscousState::from(*y), &self.0).map(Into::into)
    }
    fn wave_speed(&self) -> Option<f64> {
        Some(self.0.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wave(nu: f64, rho: f64, c: f64) -> WaveParams {
        WaveParams::new(SystemParams::new(nu, rho).unwrap(), c).unwrap()
    }

    #[test]
    fn u0_matches_reported_value() {
        // 3 - sqrt(5)
        let u0 = equilibrium_u0(2.0, 1.0).unwrap();
        assert_relative_eq!(u0, 3.0 - 5.0f64.sqrt(), max_relative = 1e-14);
        assert!((u0 - 0.76393).abs() < 5e-6);
    }

    #[test]
    fn u0_exact_arithmetic_case() {
        // 3.5 - sqrt(6.25) = 1 exactly.
        assert_eq!(equilibrium_u0(2.0, 1.5).unwrap(), 1.0);
    }

    #[test]
    fn u0_tiny_rho_limit() {
        let u0 = equilibrium_u0(5.0, 1e-300).unwrap();
        assert!(u0 > 0.0 && u0 < 2e-300);
    }

    #[test]
    fn u0_rejects_bad_domain() {
        assert!(equilibrium_u0(0.0, 1.0).is_err());
        assert!(equilibrium_u0(2.0, -1.0).is_err());
        assert!(equilibrium_u0(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn u0_stable_at_extreme_ratios() {
        for (c, rho) in [(1e8, 1.0), (1.0, 1e8), (1e-6, 2.0), (2.0, 1e-6)] {
            let w = wave(0.0, rho, c);
            assert!(w.u0 > 0.0 && w.u0 < c.min(rho));
            assert_relative_eq!(w.u0 + w.c_minus_u0(), c, max_relative = 1e-14);
        }
    }

    #[test]
    fn high_equilibrium_values() {
        assert!((high_equilibrium(2.0, 1.5) - 6.0).abs() < 1e-14);
        assert_relative_eq!(high_equilibrium(2.0, 1.0), 3.0 + 5.0f64.sqrt(), max_relative = 1e-15);
        // Monotone increasing in both arguments.
        assert!(high_equilibrium(2.1, 1.0) > high_equilibrium(2.0, 1.0));
        assert!(high_equilibrium(2.0, 1.1) > high_equilibrium(2.0, 1.0));
    }

    #[test]
    fn planar_field_hand_evaluation() {
        let w = wave(0.0, 1.0, 2.0);
        let d = planar_field(&PlanarState { t: 0.5, u: 0.3 }, &w).unwrap();
        assert_relative_eq!(d.t, -0.295, max_relative = 1e-12);
        assert_relative_eq!(d.u, 0.25 / -1.7, max_relative = 1e-12);
    }

    #[test]
    fn planar_field_equilibria_are_fixed_points() {
        let w = wave(0.0, 1.0, 2.0);
        let o = planar_field(&PlanarState { t: 0.0, u: 0.0 }, &w).unwrap();
        assert_eq!((o.t, o.u), (0.0, 0.0));
        let e = planar_field(&w.planar_equilibrium(), &w).unwrap();
        assert!(e.t.abs() < 1e-14 && e.u.abs() < 1e-14);
    }

    #[test]
    fn planar_field_guards_singularity() {
        let w = wave(0.0, 1.0, 2.0);
        let err = planar_field(&PlanarState { t: 0.5, u: 2.0 - 1e-12 }, &w);
        assert!(matches!(err, Err(ModelError::Singular { .. })));
    }

    #[test]
    fn viscous_field_hand_evaluation() {
        let w = wave(1.0, 1.0, 2.0);
        let d = viscous_field(&ViscousState { t: 0.5, u: 0.3, v: 0.2 }, &w).unwrap();
        assert_relative_eq!(d.t, -0.65, max_relative = 1e-12);
        assert_relative_eq!(d.u, -0.355, max_relative = 1e-12);
        assert_relative_eq!(d.v, -0.25, max_relative = 1e-12);
    }

    #[test]
    fn viscous_field_equilibria_are_fixed_points() {
        let w = wave(1.0, 1.0, 2.0);
        let o = viscous_field(&ViscousState { t: 0.0, u: 0.0, v: 0.0 }, &w).unwrap();
        assert_eq!((o.t, o.u, o.v), (0.0, 0.0, 0.0));
        let e = viscous_field(&w.viscous_equilibrium(), &w).unwrap();
        assert!(e.t.abs() < 1e-13 && e.u.abs() < 1e-13 && e.v.abs() < 1e-13);
    }

    #[test]
    fn viscous_field_rejects_inviscid() {
        let w = wave(0.0, 1.0, 2.0);
        assert!(viscous_field(&ViscousState { t: 0.5, u: 0.1, v: 0.1 }, &w).is_err());
    }

    #[test]
    fn conserved_planar_examples() {
        assert_eq!(conserved_planar(0.0, 0.0, 2.0, 3.0), 0.0);
        assert_eq!(conserved_planar(1.0, 0.0, 2.0, 3.0), -1.5);
        // Both equilibria on the zero level set.
        for (c, rho) in [(2.0, 1.0), (3.5, 0.2), (10.0, 40.0)] {
            let w = wave(0.0, rho, c);
            let at_eq = conserved_planar(w.u0, w.c_minus_u0(), c, rho);
            assert!(at_eq.abs() < 1e-12 * (1.0 + c * c), "residual {at_eq}");
        }
    }

    #[test]
    fn reduce_v_examples() {
        assert_eq!(reduce_v(0.0, 2.0, 1.0), 0.0);
        assert_relative_eq!(reduce_v(1.0, 2.0, 1.0), 1.5, max_relative = 1e-15);
        for (c, rho) in [(2.0, 1.0), (2.0, 0.25), (7.3, 12.0)] {
            let w = wave(0.0, rho, c);
            assert_relative_eq!(reduce_v(w.u0, c, rho), w.c_minus_u0(), max_relative = 1e-12);
        }
    }

    #[test]
    fn origin_eigenvalues_switch_regime_at_two() {
        let d = eigen_planar_origin(2.0).unwrap();
        for l in &d.eigenvalues {
            assert_relative_eq!(l.re, -1.0, max_relative = 1e-12);
            assert_eq!(l.im, 0.0);
        }
        let d = eigen_planar_origin(2.5).unwrap();
        let mut res: Vec<f64> = d.eigenvalues.iter().map(|l| l.re).collect();
        res.sort_by(f64::total_cmp);
        assert_relative_eq!(res[0], -2.0, max_relative = 1e-12);
        assert_relative_eq!(res[1], -0.5, max_relative = 1e-12);
        let d = eigen_planar_origin(1.0).unwrap();
        for l in &d.eigenvalues {
            assert_relative_eq!(l.re, -0.5, max_relative = 1e-12);
            assert_relative_eq!(l.im.abs(), 0.8660254037844386, max_relative = 1e-12);
        }
        for c in [1.9, 1.99] {
            let d = eigen_planar_origin(c).unwrap();
            assert!(d.eigenvalues.iter().all(|l| l.im != 0.0 && l.re < 0.0));
            let d3 = eigen_viscous_origin(c, 1.0).unwrap();
            assert_eq!(d3.eigenvalues.iter().filter(|l| l.im != 0.0).count(), 2);
            assert!(d3.eigenvalues.iter().all(|l| l.re < 0.0));
        }
        for c in [2.0, 2.1] {
            let d = eigen_planar_origin(c).unwrap();
            assert!(d.eigenvalues.iter().all(|l| l.im == 0.0 && l.re < 0.0));
            let d3 = eigen_viscous_origin(c, 1.0).unwrap();
            assert!(d3.eigenvalues.iter().all(|l| l.im == 0.0 && l.re < 0.0));
        }
    }

    #[test]
    fn left_equilibrium_is_a_saddle_inviscid() {
        let w = wave(0.0, 1.0, 2.0);
        let d = eigen_left_equilibrium(&w).unwrap();
        assert_eq!(d.unstable_count, 1);
        let mut res: Vec<f64> = d.eigenvalues.iter().map(|l| l.re).collect();
        res.sort_by(f64::total_cmp);
        assert!(res[0] < 0.0 && res[1] > 0.0);
        let dir = d.unstable_direction.unwrap();
        assert!(dir[0] < 0.0 && dir[1] < 0.0);
        assert_relative_eq!(dir[0] * dir[0] + dir[1] * dir[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn left_equilibrium_viscous_one_unstable_direction() {
        let w = wave(1.0, 1.0, 2.0);
        let (a2, a1, a0) = characteristic_cubic(&w);
        // g(0) = a0 < 0 forces a real positive root.
        assert!(a0 < 0.0);
        let d = eigen_left_equilibrium(&w).unwrap();
        assert_eq!(d.unstable_count, 1);
        let dir = d.unstable_direction.unwrap();
        assert!(dir[0] < 0.0 && dir[1] < 0.0 && dir[2] < 0.0);
        // Check the residual of every eigenvalue against the cubic.
        let scale = a2.abs().max(a1.abs()).max(a0.abs()).max(1.0);
        for l in &d.eigenvalues {
            let g = ((*l + a2) * *l + a1) * *l + a0;
            assert!(g.norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn left_equilibrium_large_nu_sign_pattern() {
        let w = wave(1000.0, 1.0, 2.0);
        let d = eigen_left_equilibrium(&w).unwrap();
        assert_eq!(d.unstable_count, 1);
        let mut re: Vec<f64> = d.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        assert!(re[0] < 0.0 && re[1] < 0.0 && re[2] > 0.0);
        // The middle eigenvalue is the small perturbation root near
        // (u0 - c - rho)/nu.
        let approx_mid = (w.u0 - w.c - w.rho()) / w.nu();
        assert_relative_eq!(re[1], approx_mid, max_relative = 0.05);
    }

    #[test]
    fn cubic_solver_known_roots() {
        // (x - 1)(x - 2)(x - 3) = x^3 - 6x^2 + 11x - 6.
        let mut roots: Vec<f64> = solve_cubic(-6.0, 11.0, -6.0).iter().map(|r| r.re).collect();
        roots.sort_by(f64::total_cmp);
        assert_relative_eq!(roots[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(roots[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(roots[2], 3.0, max_relative = 1e-12);
        // x^3 + x + 1: one real root near -0.6823, a complex pair.
        let roots = solve_cubic(0.0, 1.0, 1.0);
        let real: Vec<_> = roots.iter().filter(|r| r.im == 0.0).collect();
        assert_eq!(real.len(), 1);
        assert_relative_eq!(real[0].re, -0.6823278038280193, max_relative = 1e-12);
    }

    #[test]
    fn wave_params_validates_consistency() {
        let p = SystemParams::new(0.0, 1.0).unwrap();
        let mut w = WaveParams::new(p, 2.0).unwrap();
        w.u0 += 1e-9;
        assert!(w.validate().is_err());
    }
}
