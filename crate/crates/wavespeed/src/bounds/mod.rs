//! Closed-form speed bounds, trapping-region inequalities, and integral
//! identities, all as checkable predicates with margins.
//!
//! Every check normalizes its inequalities so that a nonnegative slack means
//! satisfied; a report holds exactly when its worst-case margin over the
//! sampled set is nonnegative. Conditions with full square roots are
//! evaluated exactly rather than through their large-parameter expansions.

pub mod aux;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{equilibrium_u0, planar_field, viscous_field, ModelError, PlanarState, ViscousState};
use crate::shooting::{profile_tail_rates, min_speed, Profile, ProfileTrajectory, ShootError};

#[derive(Debug, Clone, Error)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
}

pub type BoundsResult<T> = Result<T, BoundsError>;

/// Sampling region for a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `[0, 1] x [0, u0]`.
    BoxB,
    /// `[0, 1] x [0, u0] x [0, c - u0]`.
    CubeC,
    /// Explicit per-axis intervals.
    Custom(Vec<(f64, f64)>),
}

/// Sampling density and slack parameters for the checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub region: Region,
    pub points_per_axis: usize,
    /// Strict-inequality slack for the auxiliary-function templates.
    pub epsilon: f64,
    /// Origin-exclusion radius for the lower-bound template.
    pub delta: f64,
}

impl SampleSpec {
    pub fn validate(&self) -> BoundsResult<()> {
        if self.points_per_axis < 2 {
            return Err(BoundsError::Domain("points_per_axis must be >= 2".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(BoundsError::Domain("epsilon must be > 0".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundsError::Domain("delta must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// Density for one-dimensional curve checks.
    pub fn curve_default() -> Self {
        Self { region: Region::BoxB, points_per_axis: 2048, epsilon: 1e-4, delta: 0.05 }
    }

    /// Density for two-dimensional face or box checks.
    pub fn face_default() -> Self {
        Self { region: Region::BoxB, points_per_axis: 256, epsilon: 1e-4, delta: 0.05 }
    }

    /// Density for three-dimensional cube checks.
    pub fn volume_default() -> Self {
        Self { region: Region::CubeC, points_per_axis: 64, epsilon: 1e-4, delta: 0.05 }
    }
}

/// Outcome of one named bound or trapping check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub holds: bool,
    /// Worst-case slack over the sampled set; `holds == (margin >= 0)`.
    pub margin: f64,
    /// Sample realizing the worst slack (empty when not meaningful).
    pub worst_point: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub spec: SampleSpec,
}

impl BoundReport {
    fn new(
        name: &str,
        margin: f64,
        worst_point: Vec<f64>,
        params: BTreeMap<String, f64>,
        spec: SampleSpec,
    ) -> Self {
        let margin = margin + 0.0; // normalize -0.0 so reports print cleanly
        Self { name: name.to_string(), holds: margin >= 0.0, margin, worst_point, params, spec }
    }
}

/// Tracks the worst slack and where it happened.
#[derive(Debug, Clone)]
struct Worst {
    margin: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, point: Vec::new() }
    }

    fn observe(&mut self, slack: f64, point: &[f64]) {
        if slack < self.margin {
            self.margin = slack;
            self.point = point.to_vec();
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| a + step * i as f64)
}

fn params_map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Inviscid minimal-speed lower bound `max(2, (3 rho / 2)^{1/3})`.
///
/// Slow heteroclinics are excluded outright below the cube-root expression,
/// and the origin linearization excludes speeds below 2; the combination is
/// a hard floor under every computed inviscid speed.
pub fn inviscid_lower_bound(rho: f64) -> f64 {
    2.0f64.max((1.5 * rho).cbrt())
}

/// Viscous minimal-speed lower bound `max(2, rho^{1/3})`.
pub fn viscous_lower_bound(rho: f64) -> f64 {
    2.0f64.max(rho.cbrt())
}

/// Fast-wave trapping curve `U = c - sqrt(c^2 - c rho T)` for the planar
/// system: samples the crossing inequality
/// `c^2/4 - (c/2) sqrt(c^2 - c rho T) + (1 - T) <= 0` over `T in [0, 1]` and
/// requires `rho < 3c/4` so the curve stays inside the box. The geometric
/// condition only enters the margin when it is the violated one.
pub fn check_inviscid_trap(c: f64, rho: f64, spec: &SampleSpec) -> BoundsResult<BoundReport> {
    spec.validate()?;
    if c * c < c * rho {
        return Err(BoundsError::Domain(format!(
            "square root requires c^2 >= c rho, got c = {c}, rho = {rho}"
        )));
    }
    let mut worst = Worst::new();
    for t in linspace(0.0, 1.0, spec.points_per_axis) {
        let root = (c * c - c * rho * t).sqrt();
        let slack = -(0.25 * c * c - 0.5 * c * root + (1.0 - t));
        let u_curve = c - root;
        worst.observe(slack, &[t, u_curve]);
    }
    let in_box_slack = 0.75 * c - rho;
    let margin =
        if in_box_slack >= 0.0 { worst.margin } else { worst.margin.min(in_box_slack) };
    Ok(BoundReport::new(
        "inviscid_trap",
        margin,
        worst.point,
        params_map(&[("c", c), ("rho", rho)]),
        spec.clone(),
    ))
}

/// Trapping curve `U = 2 - sqrt(4 - 2 rho T)` at the pulled speed `c = 2`.
///
/// Under the profile ordering `U <= rho T`, the outward crossing quantity
/// `T (T - U)` is worst-cased to `T^2 (1 - rho)`, which degenerates exactly
/// at `rho = 1`; the check also requires the shot manifold to start above
/// the curve, `u0(2, rho) > 2 - sqrt(4 - 2 rho)`, which holds for
/// `rho < 3/2`.
pub fn check_small_rho_trap(rho: f64, spec: &SampleSpec) -> BoundsResult<BoundReport> {
    spec.validate()?;
    if !(rho > 0.0) {
        return Err(BoundsError::Domain(format!("rho must be > 0, got {rho}")));
    }
    let mut worst = Worst::new();
    for t in linspace(0.0, 1.0, spec.points_per_axis) {
        let slack = t * t * (1.0 - rho);
        let u_curve = if 2.0 * rho * t <= 4.0 { 2.0 - (4.0 - 2.0 * rho * t).sqrt() } else { f64::NAN };
        worst.observe(slack, &[t, u_curve]);
    }
    let start_above = if rho <= 2.0 {
        equilibrium_u0(2.0, rho)? - (2.0 - (4.0 - 2.0 * rho).sqrt())
    } else {
        2.0 - rho
    };
    let margin = worst.margin.min(start_above);
    let worst_point = if start_above < worst.margin { vec![1.0, f64::NAN] } else { worst.point };
    Ok(BoundReport::new(
        "small_rho_trap",
        margin,
        worst_point,
        params_map(&[("rho", rho), ("c", 2.0), ("start_above", start_above)]),
        spec.clone(),
    ))
}

/// Trapping curve `U = sigma rho^{1/3} - rho^{1/3} sqrt(sigma^2 - 2T)` for
/// fast waves at large coupling.
///
/// The crossing inequality is checked with the reaction term at its
/// supremum over the box, `rho^{-2/3} - sqrt(sigma^2 - 2T) + 1 <= 0`, which
/// is the form whose sharp constant is `sigma = sqrt(3)`; the in-box
/// condition compares the curve top against `u0` with full square roots.
pub fn check_large_rho_trap(sigma: f64, rho: f64, spec: &SampleSpec) -> BoundsResult<BoundReport> {
    spec.validate()?;
    if !(sigma * sigma > 2.0) {
        return Err(BoundsError::Domain(format!("need sigma^2 > 2, got sigma = {sigma}")));
    }
    if !(rho > 0.0) {
        return Err(BoundsError::Domain(format!("rho must be > 0, got {rho}")));
    }
    let c = sigma * rho.cbrt();
    let rho_m23 = rho.powf(-2.0 / 3.0);
    let mut worst = Worst::new();
    for t in linspace(0.0, 1.0, spec.points_per_axis) {
        let slack = (sigma * sigma - 2.0 * t).sqrt() - 1.0 - rho_m23;
        let u_curve = c - rho.cbrt() * (sigma * sigma - 2.0 * t).sqrt();
        worst.observe(slack, &[t, u_curve]);
    }
    let curve_top = c - rho.cbrt() * (sigma * sigma - 2.0).sqrt();
    let in_box_slack = equilibrium_u0(c, rho)? - curve_top;
    let margin = worst.margin.min(in_box_slack);
    Ok(BoundReport::new(
        "large_rho_trap",
        margin,
        worst.point,
        params_map(&[("sigma", sigma), ("rho", rho), ("c", c), ("in_box", in_box_slack)]),
        spec.clone(),
    ))
}

/// The three viscous trapping regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapRegion {
    /// `(c/2) T <= V <= c - u0`, valid for large speeds.
    R1,
    /// `R1` sharpened by `nu U <= sqrt(rho) T`, valid for small `nu, rho` at
    /// `c >= 2`.
    R2,
    /// `(sigma^2/4) T <= V <= c - u0` with `sigma = c / sqrt(rho)`, valid
    /// for `sigma > 2` at large `rho`.
    R3,
}

/// Samples the outward crossing derivative on each active face of the
/// chosen region, using the exact expressions (no large-parameter
/// simplification). Faces only repel where the crossing quantity is
/// nonnegative; the flux component decreases everywhere in the cube, so the
/// upper flux face is never active.
pub fn check_viscous_traps(
    kind: TrapRegion,
    w: &crate::model::WaveParams,
    spec: &SampleSpec,
) -> BoundsResult<BoundReport> {
    spec.validate()?;
    let (c, rho, nu) = (w.c, w.rho(), w.nu());
    let u0 = w.u0;
    let d = w.c_minus_u0();
    let n = spec.points_per_axis;
    let mut worst = Worst::new();
    let name;
    match kind {
        TrapRegion::R1 => {
            name = "viscous_trap_r1";
            // Lower face V = (c/2) T: crossing of V - (c/2) T, sign factor T
            // removed.
            for t in linspace(0.0, 1.0, n) {
                for u in linspace(0.0, u0, n) {
                    let slack = 0.25 * c * c - 0.5 * c * u + t - 1.0;
                    worst.observe(slack, &[t, u, 0.5 * c * t]);
                }
            }
            worst.observe(0.5 * c - u0, &[1.0, u0, d]);
        }
        TrapRegion::R2 => {
            name = "viscous_trap_r2";
            let sr = rho.sqrt();
            // Face nu U = sqrt(rho) T, exact crossing of sqrt(rho) T - nu U.
            let u_max = u0.min(sr / nu);
            for u in linspace(0.0, u_max, n) {
                let t = nu * u / sr;
                let v_lo = 0.5 * c * t;
                for v in linspace(v_lo, d.max(v_lo), n) {
                    let slack = u * (0.5 * c - (nu - 0.5) * (c - u)) + sr * (1.0 - sr) * v;
                    worst.observe(slack, &[t, u, v]);
                }
            }
            // Face V = (c/2) T under nu U <= sqrt(rho) T.
            for t in linspace(0.0, 1.0, n) {
                let u_hi = u0.min(sr * t / nu);
                for u in linspace(0.0, u_hi, n) {
                    let slack = 0.25 * c * c - 0.5 * c * u + t - 1.0;
                    worst.observe(slack, &[t, u, 0.5 * c * t]);
                }
            }
            worst.observe(0.5 * c - u0, &[1.0, u0, d]);
            worst.observe(sr - nu * u0, &[1.0, u0, d]);
        }
        TrapRegion::R3 => {
            name = "viscous_trap_r3";
            let sigma = c / rho.sqrt();
            let s2 = sigma * sigma;
            // Lower face V = (sigma^2/4) T.
            for t in linspace(0.0, 1.0, n) {
                for u in linspace(0.0, u0, n) {
                    let slack = t - 1.0 - s2 * s2 / 16.0 + 0.25 * s2 * (c - u);
                    worst.observe(slack, &[t, u, 0.25 * s2 * t]);
                }
            }
            worst.observe(d - 0.25 * s2, &[1.0, u0, d]);
        }
    }
    Ok(BoundReport::new(
        name,
        worst.margin,
        worst.point,
        params_map(&[("nu", nu), ("rho", rho), ("c", c), ("u0", u0)]),
        spec.clone(),
    ))
}

/// Trapezoid quadrature over the sampled orbit with a derivative (Hermite)
/// correction per interval and exponential tail estimates at both ends.
fn corrected_trapezoid(xs: &[f64], fs: &[f64], dfs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        acc += 0.5 * h * (fs[i - 1] + fs[i]) + h * h / 12.0 * (dfs[i - 1] - dfs[i]);
    }
    acc
}

/// Integral identities along an existing profile:
///
/// * flux identity `int T(1-T) = c - u0` (relative 1e-4);
/// * the lower bound `int (c-U) T(1-T) >= 1/2`;
/// * for inviscid profiles, the exact value
///   `int (c-U) T(1-T) = (c^3 - (c-u0)^3) / (3 rho)` (relative 1e-4).
pub fn wave_integral_diagnostics(profile: &Profile) -> BoundsResult<Vec<BoundReport>> {
    let w = &profile.wave;
    let (c, rho) = (w.c, w.rho());
    let (rate_left, rate_right) = profile_tail_rates(w)?;
    let mut xs = Vec::with_capacity(profile.trajectory.len());
    let mut f1 = Vec::with_capacity(xs.capacity());
    let mut df1 = Vec::with_capacity(xs.capacity());
    let mut f2 = Vec::with_capacity(xs.capacity());
    let mut df2 = Vec::with_capacity(xs.capacity());
    match &profile.trajectory {
        ProfileTrajectory::Planar(traj) => {
            for (xi, y) in &traj.samples {
                let s = PlanarState { t: y[0], u: y[1] };
                let dot = planar_field(&s, w)?;
                xs.push(*xi);
                f1.push(s.t * (1.0 - s.t));
                df1.push(dot.t * (1.0 - 2.0 * s.t));
                f2.push((c - s.u) * s.t * (1.0 - s.t));
                df2.push(-dot.u * s.t * (1.0 - s.t) + (c - s.u) * dot.t * (1.0 - 2.0 * s.t));
            }
        }
        ProfileTrajectory::Viscous(traj) => {
            for (xi, y) in &traj.samples {
                let s = ViscousState { t: y[0], u: y[1], v: y[2] };
                let dot = viscous_field(&s, w)?;
                xs.push(*xi);
                f1.push(s.t * (1.0 - s.t));
                df1.push(dot.t * (1.0 - 2.0 * s.t));
                f2.push((c - s.u) * s.t * (1.0 - s.t));
                df2.push(-dot.u * s.t * (1.0 - s.t) + (c - s.u) * dot.t * (1.0 - 2.0 * s.t));
            }
        }
    }
    let tail = |f: &[f64]| f[0] / rate_left + f[f.len() - 1] / rate_right;
    let i1 = corrected_trapezoid(&xs, &f1, &df1) + tail(&f1);
    let i2 = corrected_trapezoid(&xs, &f2, &df2) + tail(&f2);

    let d = w.c_minus_u0();
    let params = params_map(&[("nu", w.nu()), ("rho", rho), ("c", c), ("u0", w.u0)]);
    let spec = SampleSpec::curve_default();
    let mut reports = vec![
        BoundReport::new(
            "flux_identity",
            1e-4 - (i1 - d).abs() / d,
            vec![i1, d],
            params.clone(),
            spec.clone(),
        ),
        BoundReport::new(
            "half_lower_bound",
            i2 - (0.5 - 1e-6),
            vec![i2],
            params.clone(),
            spec.clone(),
        ),
    ];
    if w.params.is_inviscid() {
        let closed = (c.powi(3) - d.powi(3)) / (3.0 * rho);
        reports.push(BoundReport::new(
            "inviscid_cubic_identity",
            1e-4 - (i2 - closed).abs() / closed,
            vec![i2, closed],
            params,
            spec,
        ));
    }
    Ok(reports)
}

/// One cell of the speed surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub nu: f64,
    pub rho: f64,
    pub speed: Option<f64>,
    pub error: Option<String>,
}

/// Speed surface over a `(nu, rho)` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    /// Monotonicity violations, reported rather than asserted.
    pub findings: Vec<String>,
}

/// Runs the shooting minimal speed on every grid cell; per-cell errors are
/// recorded and monotonicity violations along each axis are collected as
/// findings.
pub fn figure1_sweep(
    nu_values: &[f64],
    rho_values: &[f64],
    tol_c: f64,
    jobs: usize,
) -> SweepTable {
    let mut grid = Vec::with_capacity(nu_values.len() * rho_values.len());
    for &nu in nu_values {
        for &rho in rho_values {
            grid.push((nu, rho));
        }
    }
    let cells = crate::cli::parallel_map(&grid, jobs, |&(nu, rho)| {
        match crate::model::SystemParams::new(nu, rho)
            .map_err(ShootError::from)
            .and_then(|p| min_speed(&p, tol_c))
        {
            Ok(out) => {
                SweepCell { nu, rho, speed: Some(out.estimate.value), error: None }
            }
            Err(e) => SweepCell { nu, rho, speed: None, error: Some(e.to_string()) },
        }
    });
    let mut findings = Vec::new();
    let slack = |c: f64| 10.0 * tol_c * c.max(2.0);
    let idx = |i: usize, j: usize| i * rho_values.len() + j;
    for (i, &nu) in nu_values.iter().enumerate() {
        for j in 1..rho_values.len() {
            if let (Some(a), Some(b)) = (cells[idx(i, j - 1)].speed, cells[idx(i, j)].speed) {
                if b < a - slack(a) {
                    findings.push(format!(
                        "speed decreases along rho at nu = {nu}: c({}) = {a:.6} > c({}) = {b:.6}",
                        rho_values[j - 1],
                        rho_values[j]
                    ));
                }
            }
        }
    }
    for (j, &rho) in rho_values.iter().enumerate() {
        for i in 1..nu_values.len() {
            if let (Some(a), Some(b)) = (cells[idx(i - 1, j)].speed, cells[idx(i, j)].speed) {
                if b < a - slack(a) {
                    findings.push(format!(
                        "speed decreases along nu at rho = {rho}: c({}) = {a:.6} > c({}) = {b:.6}",
                        nu_values[i - 1],
                        nu_values[i]
                    ));
                }
            }
        }
    }
    SweepTable { cells, findings }
}
