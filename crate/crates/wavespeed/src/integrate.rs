//! Adaptive explicit ODE integration with event detection.
//!
//! A Dormand-Prince 5(4) embedded pair advances the spatial systems forward
//! in `xi`, storing one sample per accepted step. Integration stops at the
//! first crossing of any armed event, localized in `xi` by bisecting the
//! final step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EigenData, ModelError, ModelResult, WaveParams};

/// Errors from trajectory integration.
#[derive(Debug, Clone, Error)]
pub enum IntegrateError {
    /// Step size collapsed below `1e-3 * event_tol`, usually a blow-up or a
    /// singularity of the field.
    #[error("step size underflow at xi = {xi}: state = {state:?}")]
    StepUnderflow { xi: f64, state: Vec<f64> },
    /// The field produced a non-finite value.
    #[error("non-finite state at xi = {xi}")]
    NonFinite { xi: f64 },
    /// The vector field refused to evaluate.
    #[error("vector field error at xi = {xi}: {source}")]
    Field { xi: f64, source: ModelError },
    /// An event in the set cannot be evaluated on this system.
    #[error("event {0} is not applicable: {1}")]
    BadEvent(String, String),
    /// Safety cap on the number of steps.
    #[error("step limit {0} exceeded")]
    StepLimit(usize),
}

pub type IntegrateResult<T> = Result<T, IntegrateError>;

/// Autonomous vector field of dimension `N`.
pub trait VectorField<const N: usize> {
    fn eval(&self, y: &[f64; N]) -> ModelResult<[f64; N]>;

    /// Wave speed of the underlying traveling-wave system, when there is
    /// one; required by the [`EventKind::UReachesC`] event.
    fn wave_speed(&self) -> Option<f64> {
        None
    }
}

/// Integration tolerances and budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative error per step.
    pub rel_tol: f64,
    /// Absolute error per step.
    pub abs_tol: f64,
    /// Localization tolerance for event positions in `xi`.
    pub event_tol: f64,
    /// Maximum integration length in `xi`.
    pub xi_budget: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, event_tol: 1e-10, xi_budget: 1e4 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> ModelResult<()> {
        let ok = self.rel_tol >= 1e-14
            && self.abs_tol > 0.0
            && self.event_tol > 0.0
            && self.xi_budget > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Domain(format!("invalid tolerances: {self:?}")))
        }
    }

    /// Tightened copy used when a classification comes back inconclusive:
    /// tolerances divide by ten, the budget multiplies by ten.
    pub fn tightened(&self) -> Self {
        Self {
            rel_tol: (self.rel_tol / 10.0).max(1e-14),
            abs_tol: self.abs_tol / 10.0,
            event_tol: self.event_tol,
            xi_budget: self.xi_budget * 10.0,
        }
    }
}

/// What can terminate a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Velocity component drops to the threshold (exit through `U = 0`).
    UBelow,
    /// Flux component drops to the threshold (exit through `V = 0`).
    VBelow,
    /// Euclidean norm of the state enters a ball around the origin.
    NearOrigin,
    /// Temperature drops to the threshold.
    TNegative,
    /// Temperature rises to the threshold.
    TAboveOne,
    /// Velocity comes within the threshold of the wave speed, where the
    /// inviscid field is singular.
    UReachesC,
    /// The `xi` budget ran out before any other event fired.
    BudgetExhausted,
}

/// An event with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub threshold: f64,
}

impl Event {
    pub fn u_below(threshold: f64) -> Self {
        Self { kind: EventKind::UBelow, threshold }
    }
    pub fn v_below(threshold: f64) -> Self {
        Self { kind: EventKind::VBelow, threshold }
    }
    pub fn near_origin(radius: f64) -> Self {
        Self { kind: EventKind::NearOrigin, threshold: radius }
    }
    pub fn t_negative(threshold: f64) -> Self {
        Self { kind: EventKind::TNegative, threshold }
    }
    pub fn t_above_one(threshold: f64) -> Self {
        Self { kind: EventKind::TAboveOne, threshold }
    }
    pub fn u_reaches_c(gap: f64) -> Self {
        Self { kind: EventKind::UReachesC, threshold: gap }
    }

    /// Threshold sanity per event kind.
    fn validate(&self) -> IntegrateResult<()> {
        if !self.threshold.is_finite() {
            return Err(IntegrateError::BadEvent(
                format!("{:?}", self.kind),
                format!("threshold {} is not finite", self.threshold),
            ));
        }
        if self.kind == EventKind::NearOrigin && !(self.threshold > 0.0) {
            return Err(IntegrateError::BadEvent(
                "NEAR_ORIGIN".into(),
                "radius must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Signed gap to the event: positive before the crossing, `<= 0` at and
    /// beyond it.
    fn gap<const N: usize>(&self, y: &[f64; N], c: Option<f64>) -> IntegrateResult<f64> {
        match self.kind {
            EventKind::UBelow => {
                require_dim::<N>(2, "U_BELOW")?;
                Ok(y[1] - self.threshold)
            }
            EventKind::VBelow => {
                require_dim::<N>(3, "V_BELOW")?;
                Ok(y[2] - self.threshold)
            }
            EventKind::NearOrigin => {
                let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                Ok(norm - self.threshold)
            }
            EventKind::TNegative => Ok(y[0] - self.threshold),
            EventKind::TAboveOne => Ok(self.threshold - y[0]),
            EventKind::UReachesC => {
                require_dim::<N>(2, "U_REACHES_C")?;
                let c = c.ok_or_else(|| {
                    IntegrateError::BadEvent(
                        "U_REACHES_C".into(),
                        "the vector field reports no wave speed".into(),
                    )
                })?;
                Ok((y[1] - c).abs() - self.threshold)
            }
            EventKind::BudgetExhausted => Ok(f64::INFINITY),
        }
    }
}

fn require_dim<const N: usize>(min: usize, name: &str) -> IntegrateResult<()> {
    if N < min {
        Err(IntegrateError::BadEvent(
            name.into(),
            format!("needs at least {min} state components, system has {N}"),
        ))
    } else {
        Ok(())
    }
}

/// A sampled orbit together with the event that terminated it.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    /// One `(xi, state)` pair per accepted step, `xi` strictly increasing.
    pub samples: Vec<(f64, [f64; N])>,
    pub terminal_event: EventKind,
    pub terminal_xi: f64,
}

impl<const N: usize> Trajectory<N> {
    pub fn last_state(&self) -> [f64; N] {
        self.samples.last().expect("trajectory has at least the initial sample").1
    }

    /// Smallest value of state component `i` over all samples.
    pub fn component_min(&self, i: usize) -> f64 {
        self.samples.iter().map(|(_, y)| y[i]).fold(f64::INFINITY, f64::min)
    }

    /// Largest value of state component `i` over all samples.
    pub fn component_max(&self, i: usize) -> f64 {
        self.samples.iter().map(|(_, y)| y[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV dump with header `xi,T,U[,V[,W]]`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let names = ["T", "U", "V", "W"];
        write!(out, "xi")?;
        for name in names.iter().take(N) {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for (xi, y) in &self.samples {
            write!(out, "{xi:.16e}")?;
            for v in y.iter() {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const BHAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 20_000_000;

fn weighted_sum<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], ks: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (a, k) in coeffs.iter().zip(ks.iter()) {
        if *a != 0.0 {
            for i in 0..N {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// One Dormand-Prince step of size `h` from `y` with stage-1 slope `k1`.
/// Returns the 5th-order solution, the embedded error vector, and the last
/// stage slope (the slope at the new point, reusable as the next `k1`).
fn dopri5_step<const N: usize, F: VectorField<N>>(
    field: &F,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ModelResult<([f64; N], [f64; N], [f64; N])> {
    let k2 = field.eval(&weighted_sum(y, h, &A2, &[*k1]))?;
    let k3 = field.eval(&weighted_sum(y, h, &A3, &[*k1, k2]))?;
    let k4 = field.eval(&weighted_sum(y, h, &A4, &[*k1, k2, k3]))?;
    let k5 = field.eval(&weighted_sum(y, h, &A5, &[*k1, k2, k3, k4]))?;
    let k6 = field.eval(&weighted_sum(y, h, &A6, &[*k1, k2, k3, k4, k5]))?;
    let y_new = weighted_sum(y, h, &B, &[*k1, k2, k3, k4, k5, k6]);
    let k7 = field.eval(&y_new)?;
    let ks = [*k1, k2, k3, k4, k5, k6, k7];
    let mut err = [0.0; N];
    for i in 0..N {
        let mut lo = 0.0;
        for (j, k) in ks.iter().enumerate() {
            let b = if j < 6 { B[j] } else { 0.0 };
            lo += (b - BHAT[j]) * k[i];
        }
        err[i] = h * lo;
    }
    Ok((y_new, err, k7))
}

fn error_norm<const N: usize>(err: &[f64; N], y: &[f64; N], y_new: &[f64; N], tols: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = tols.abs_tol + tols.rel_tol * y[i].abs().max(y_new[i].abs());
        let e = err[i] / scale;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

/// Initial step-size heuristic.
fn initial_step<const N: usize>(y: &[f64; N], f: &[f64; N]) -> f64 {
    let ny = y.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nf = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = if nf > 1e-12 { 0.01 * (ny.max(1e-6)) / nf } else { 1e-3 };
    h.clamp(1e-10, 1.0)
}

/// Integrates `field` forward in `xi` from `start` until the first event in
/// `events` fires or the budget in `tols` runs out. The budget event is
/// always armed. Events whose gap is already non-positive at the start are
/// disarmed until their gap first becomes positive.
pub fn integrate_until_event<const N: usize, F: VectorField<N>>(
    field: &F,
    start: [f64; N],
    events: &[Event],
    tols: &Tolerances,
) -> IntegrateResult<Trajectory<N>> {
    tols.validate().map_err(|e| IntegrateError::Field { xi: 0.0, source: e })?;
    let c = field.wave_speed();
    let mut xi = 0.0;
    let mut y = start;
    let mut samples = vec![(xi, y)];
    let mut k1 = field.eval(&y).map_err(|e| IntegrateError::Field { xi, source: e })?;

    let mut armed: Vec<bool> = Vec::with_capacity(events.len());
    let mut gaps: Vec<f64> = Vec::with_capacity(events.len());
    for ev in events {
        ev.validate()?;
        let g = ev.gap(&y, c)?;
        armed.push(g > 0.0);
        gaps.push(g);
    }

    let mut h = initial_step(&y, &k1);
    let min_step = 1e-3 * tols.event_tol;

    for _step in 0..MAX_STEPS {
        // Budget exhaustion wins over step underflow when what remains of
        // the budget is itself below the minimum step (the final clamped
        // step can land an ulp short of the budget).
        if tols.xi_budget - xi < min_step {
            return Ok(Trajectory { samples, terminal_event: EventKind::BudgetExhausted, terminal_xi: xi });
        }
        h = h.min(tols.xi_budget - xi);
        if h < min_step {
            return Err(IntegrateError::StepUnderflow { xi, state: y.to_vec() });
        }

        let (y_new, err, k_end) = match dopri5_step(field, &y, &k1, h) {
            Ok(v) => v,
            Err(source) => {
                // A singular or domain-failing field inside the trial step:
                // try a smaller step before giving up.
                if h / 2.0 < min_step {
                    return Err(IntegrateError::Field { xi, source });
                }
                h /= 2.0;
                continue;
            }
        };
        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFinite { xi });
        }
        let en = error_norm(&err, &y, &y_new, tols);
        if !en.is_finite() {
            return Err(IntegrateError::NonFinite { xi });
        }
        if en > 1.0 {
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }

        // Accepted. Check events over [xi, xi + h].
        let mut hit: Option<(usize, f64, [f64; N])> = None;
        for (idx, ev) in events.iter().enumerate() {
            let g_new = ev.gap(&y_new, c)?;
            if armed[idx] && gaps[idx] > 0.0 && g_new <= 0.0 {
                let (theta, y_ev) = localize_event(field, &y, &k1, h, ev, c, tols)?;
                match hit {
                    Some((_, best, _)) if theta >= best => {}
                    _ => hit = Some((idx, theta, y_ev)),
                }
            }
            if !armed[idx] && g_new > 0.0 {
                armed[idx] = true;
            }
            gaps[idx] = g_new;
        }

        if let Some((idx, theta, y_ev)) = hit {
            let xi_ev = xi + theta * h;
            samples.push((xi_ev, y_ev));
            return Ok(Trajectory {
                samples,
                terminal_event: events[idx].kind,
                terminal_xi: xi_ev,
            });
        }

        xi += h;
        y = y_new;
        k1 = k_end;
        samples.push((xi, y));
        h *= (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    Err(IntegrateError::StepLimit(MAX_STEPS))
}

/// Bisects the step fraction `theta` until the event crossing is bracketed
/// within `event_tol` in `xi`; returns the fraction on the fired side and
/// the state there. Each probe is a single Runge-Kutta step from the step's
/// start, so the probe error is of the same order as the accepted step.
fn localize_event<const N: usize, F: VectorField<N>>(
    field: &F,
    y0: &[f64; N],
    k1: &[f64; N],
    h: f64,
    ev: &Event,
    c: Option<f64>,
    tols: &Tolerances,
) -> IntegrateResult<(f64, [f64; N])> {
    let eval_at = |theta: f64| -> IntegrateResult<[f64; N]> {
        if theta == 0.0 {
            return Ok(*y0);
        }
        let (y, _, _) = dopri5_step(field, y0, k1, theta * h)
            .map_err(|source| IntegrateError::Field { xi: theta * h, source })?;
        Ok(y)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut y_hi = eval_at(1.0)?;
    // Guard: if the gap fails to change sign on re-evaluation (can happen
    // within localization noise), report the step end.
    if ev.gap(&y_hi, c)? > 0.0 {
        return Ok((1.0, y_hi));
    }
    while (hi - lo) * h > tols.event_tol {
        let mid = 0.5 * (lo + hi);
        let y_mid = eval_at(mid)?;
        if ev.gap(&y_mid, c)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
        }
    }
    Ok((hi, y_hi))
}

/// Default scale for the seed offset along the unstable direction:
/// `1e-6 * max(1, |equilibrium|)` balances linearization error against
/// round-off amplification.
pub fn default_seed_offset(equilibrium_norm: f64) -> f64 {
    1e-6 * equilibrium_norm.max(1.0)
}

/// Default radius of the origin ball that declares convergence.
pub const DEFAULT_ORIGIN_RADIUS: f64 = 1e-6;

/// Seed on the unstable manifold of the planar left equilibrium:
/// `(1, u0) + offset * direction`, temperature component decreasing.
pub fn seed_unstable_planar(w: &WaveParams, offset: f64) -> ModelResult<[f64; 2]> {
    let eig = crate::model::eigen_left_equilibrium(&inviscid_copy(w))?;
    let dir = eig.unstable_direction.expect("left equilibrium has an unstable direction");
    Ok([1.0 + offset * dir[0], w.u0 + offset * dir[1]])
}

/// Seed on the unstable manifold of the three-dimensional left equilibrium:
/// `(1, u0, c - u0) + offset * direction`, all components decreasing.
pub fn seed_unstable_viscous(w: &WaveParams, offset: f64) -> ModelResult<[f64; 3]> {
    let eig = crate::model::eigen_left_equilibrium(w)?;
    let dir = eig.unstable_direction.expect("left equilibrium has an unstable direction");
    Ok([
        1.0 + offset * dir[0],
        w.u0 + offset * dir[1],
        w.c_minus_u0() + offset * dir[2],
    ])
}

/// Positive (unstable) eigenvalue of the left equilibrium.
pub fn unstable_rate(eig: &EigenData) -> f64 {
    eig.eigenvalues
        .iter()
        .filter(|l| l.re > 0.0)
        .map(|l| l.re)
        .fold(0.0, f64::max)
}

fn inviscid_copy(w: &WaveParams) -> WaveParams {
    WaveParams {
        params: crate::model::SystemParams { nu: 0.0, rho: w.rho() },
        c: w.c,
        u0: w.u0,
    }
}
