//! Heteroclinic-connection classification and minimal-speed computation.
//!
//! A candidate speed is classified by shooting the one-dimensional unstable
//! manifold of the left equilibrium and watching which event terminates the
//! orbit. The minimal speed is then the classifier transition, bracketed and
//! bisected in `c`; scans over `rho` produce prefactor tables and the
//! pulled-to-pushed threshold.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{inviscid_lower_bound, viscous_lower_bound};
use crate::integrate::{
    default_seed_offset, integrate_until_event, seed_unstable_planar, seed_unstable_viscous,
    unstable_rate, Event, EventKind, IntegrateError, Tolerances, Trajectory,
    DEFAULT_ORIGIN_RADIUS,
};
use crate::model::{
    eigen_left_equilibrium, eigen_planar_equilibrium, high_equilibrium, planar_field,
    viscous_field, ModelError, PlanarState, PlanarSystem, SystemParams, ViscousState,
    ViscousSystem, WaveParams,
};

/// Default relative tolerance on the minimal speed; the reference tables are
/// quoted to four significant digits.
pub const DEFAULT_TOL_C: f64 = 1e-4;

/// Ceiling for upper-bracket growth before reporting failure.
const BRACKET_CEILING: f64 = 1e6;

#[derive(Debug, Clone, Error)]
pub enum ShootError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("bracket failure: {0}")]
    Bracket(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type ShootResult<T> = Result<T, ShootError>;

/// Three-valued existence verdict for a heteroclinic connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Exists,
    NotExists,
    Inconclusive,
}

/// Trajectory of either reduced system.
#[derive(Debug, Clone)]
pub enum ProfileTrajectory {
    Planar(Trajectory<2>),
    Viscous(Trajectory<3>),
}

impl ProfileTrajectory {
    pub fn len(&self) -> usize {
        match self {
            Self::Planar(t) => t.len(),
            Self::Viscous(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn terminal_event(&self) -> EventKind {
        match self {
            Self::Planar(t) => t.terminal_event,
            Self::Viscous(t) => t.terminal_event,
        }
    }

    /// `(xi, T, U, Some(V))` per sample.
    pub fn rows(&self) -> Vec<(f64, f64, f64, Option<f64>)> {
        match self {
            Self::Planar(t) => t.samples.iter().map(|(x, y)| (*x, y[0], y[1], None)).collect(),
            Self::Viscous(t) => {
                t.samples.iter().map(|(x, y)| (*x, y[0], y[1], Some(y[2]))).collect()
            }
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        match self {
            Self::Planar(t) => t.write_csv(out),
            Self::Viscous(t) => t.write_csv(out),
        }
    }
}

/// Verdict for a single candidate speed.
#[derive(Debug, Clone)]
pub struct WaveClassification {
    pub verdict: Verdict,
    pub terminal_event: EventKind,
    pub trajectory: Option<ProfileTrajectory>,
    /// Populated when integration failed or the verdict needed a caveat.
    pub diagnostic: Option<String>,
}

/// Classifies the heteroclinic connection at the parameters of `w`.
///
/// Inviscid systems exist exactly when the shot manifold reaches the origin
/// ball with `U` never dipping below `-event_tol`; they fail to exist when
/// the orbit exits through `U = 0`. Viscous systems exit through `V = 0`,
/// after which the temperature must be driven negative before non-existence
/// is certified.
pub fn classify_wave(w: &WaveParams, tols: &Tolerances) -> WaveClassification {
    if w.params.is_inviscid() {
        classify_planar(w, tols)
    } else {
        classify_viscous(w, tols)
    }
}

fn inconclusive(diag: String) -> WaveClassification {
    WaveClassification {
        verdict: Verdict::Inconclusive,
        terminal_event: EventKind::BudgetExhausted,
        trajectory: None,
        diagnostic: Some(diag),
    }
}

fn classify_planar(w: &WaveParams, tols: &Tolerances) -> WaveClassification {
    let eq_norm = (1.0 + w.u0 * w.u0).sqrt();
    let seed = match seed_unstable_planar(w, default_seed_offset(eq_norm)) {
        Ok(s) => s,
        Err(e) => return inconclusive(format!("seeding failed: {e}")),
    };
    let events = [Event::u_below(0.0), Event::near_origin(DEFAULT_ORIGIN_RADIUS)];
    let system = PlanarSystem(*w);
    let mut traj = match integrate_until_event(&system, seed, &events, tols) {
        Ok(t) => t,
        Err(e) => return inconclusive(format!("integration failed: {e}")),
    };
    // Ball entry only counts as convergence when the origin linearization
    // is rotation-free (real eigenvalues, c >= 2) and every component is
    // still decreasing; a sub-pulled-speed spiral contracts into the ball
    // before its velocity swings negative, and must keep integrating until
    // it does.
    let rotation_free = w.c >= 2.0;
    while traj.terminal_event == EventKind::NearOrigin {
        let end = traj.last_state();
        let decreasing = planar_field(&PlanarState::from(end), w)
            .map(|d| d.t <= 0.0 && d.u <= 0.0)
            .unwrap_or(false);
        if rotation_free && decreasing {
            break;
        }
        let remaining = tols.xi_budget - traj.terminal_xi;
        if remaining <= 0.0 {
            traj.terminal_event = EventKind::BudgetExhausted;
            break;
        }
        let cont = match integrate_until_event(
            &system,
            end,
            &events,
            &Tolerances { xi_budget: remaining, ..*tols },
        ) {
            Ok(t) => t,
            Err(e) => return inconclusive(format!("integration failed: {e}")),
        };
        let offset = traj.terminal_xi;
        traj.samples.extend(cont.samples.into_iter().skip(1).map(|(x, y)| (x + offset, y)));
        traj.terminal_event = cont.terminal_event;
        traj.terminal_xi = offset + cont.terminal_xi;
    }
    let (verdict, diagnostic) = match traj.terminal_event {
        EventKind::NearOrigin => {
            if traj.component_min(1) >= -tols.event_tol {
                (Verdict::Exists, None)
            } else {
                (Verdict::Inconclusive, Some("origin reached but U dipped negative".into()))
            }
        }
        EventKind::UBelow => (Verdict::NotExists, None),
        EventKind::BudgetExhausted => {
            (Verdict::Inconclusive, Some("xi budget exhausted inside the box".into()))
        }
        other => (Verdict::Inconclusive, Some(format!("unexpected terminal event {other:?}"))),
    };
    WaveClassification {
        verdict,
        terminal_event: traj.terminal_event,
        trajectory: Some(ProfileTrajectory::Planar(traj)),
        diagnostic,
    }
}

fn classify_viscous(w: &WaveParams, tols: &Tolerances) -> WaveClassification {
    let eq = w.viscous_equilibrium();
    let eq_norm = (1.0 + eq.u * eq.u + eq.v * eq.v).sqrt();
    let seed = match seed_unstable_viscous(w, default_seed_offset(eq_norm)) {
        Ok(s) => s,
        Err(e) => return inconclusive(format!("seeding failed: {e}")),
    };
    let events = [Event::v_below(0.0), Event::near_origin(DEFAULT_ORIGIN_RADIUS)];
    let system = ViscousSystem(*w);
    let mut traj = match integrate_until_event(&system, seed, &events, tols) {
        Ok(t) => t,
        Err(e) => return inconclusive(format!("integration failed: {e}")),
    };
    let rotation_free = w.c >= 2.0;
    while traj.terminal_event == EventKind::NearOrigin {
        let end = traj.last_state();
        let decreasing = viscous_field(&ViscousState::from(end), w)
            .map(|d| d.t <= 0.0 && d.u <= 0.0 && d.v <= 0.0)
            .unwrap_or(false);
        if rotation_free && decreasing {
            break;
        }
        let remaining = tols.xi_budget - traj.terminal_xi;
        if remaining <= 0.0 {
            traj.terminal_event = EventKind::BudgetExhausted;
            break;
        }
        let cont = match integrate_until_event(
            &system,
            end,
            &events,
            &Tolerances { xi_budget: remaining, ..*tols },
        ) {
            Ok(t) => t,
            Err(e) => return inconclusive(format!("integration failed: {e}")),
        };
        let offset = traj.terminal_xi;
        traj.samples.extend(cont.samples.into_iter().skip(1).map(|(x, y)| (x + offset, y)));
        traj.terminal_event = cont.terminal_event;
        traj.terminal_xi = offset + cont.terminal_xi;
    }
    match traj.terminal_event {
        EventKind::NearOrigin => {
            let (verdict, diagnostic) = if traj.component_min(2) >= -tols.event_tol {
                (Verdict::Exists, None)
            } else {
                (Verdict::Inconclusive, Some("origin reached but V dipped negative".into()))
            };
            WaveClassification {
                verdict,
                terminal_event: EventKind::NearOrigin,
                trajectory: Some(ProfileTrajectory::Viscous(traj)),
                diagnostic,
            }
        }
        EventKind::VBelow => {
            // Exit through V = 0 alone does not certify non-existence; the
            // temperature must actually be driven negative downstream.
            let xi0 = traj.terminal_xi;
            let remaining = Tolerances { xi_budget: (tols.xi_budget - xi0).max(1.0), ..*tols };
            let follow_events = [Event::t_negative(0.0), Event::near_origin(DEFAULT_ORIGIN_RADIUS)];
            let follow =
                match integrate_until_event(&system, traj.last_state(), &follow_events, &remaining)
                {
                    Ok(t) => t,
                    Err(e) => {
                        return WaveClassification {
                            verdict: Verdict::Inconclusive,
                            terminal_event: EventKind::VBelow,
                            trajectory: Some(ProfileTrajectory::Viscous(traj)),
                            diagnostic: Some(format!(
                                "V crossed zero but certification integration failed: {e}"
                            )),
                        }
                    }
                };
            let (verdict, diagnostic) = match follow.terminal_event {
                EventKind::TNegative => (Verdict::NotExists, None),
                other => (
                    Verdict::Inconclusive,
                    Some(format!("V crossed zero but T never went negative ({other:?})")),
                ),
            };
            let terminal_event = follow.terminal_event;
            let terminal_xi = xi0 + follow.terminal_xi;
            traj.samples
                .extend(follow.samples.into_iter().skip(1).map(|(x, y)| (x + xi0, y)));
            traj.terminal_event = terminal_event;
            traj.terminal_xi = terminal_xi;
            WaveClassification {
                verdict,
                terminal_event,
                trajectory: Some(ProfileTrajectory::Viscous(traj)),
                diagnostic,
            }
        }
        EventKind::BudgetExhausted => WaveClassification {
            verdict: Verdict::Inconclusive,
            terminal_event: EventKind::BudgetExhausted,
            trajectory: Some(ProfileTrajectory::Viscous(traj)),
            diagnostic: Some("xi budget exhausted inside the cube".into()),
        },
        other => WaveClassification {
            verdict: Verdict::Inconclusive,
            terminal_event: other,
            trajectory: Some(ProfileTrajectory::Viscous(traj)),
            diagnostic: Some(format!("unexpected terminal event {other:?}")),
        },
    }
}

/// Classification with the inconclusive-retry policy: one retry at ten times
/// tighter tolerances and ten times the budget. Returns the classification
/// and the number of shots taken.
pub fn classify_robust(w: &WaveParams, tols: &Tolerances) -> (WaveClassification, u64) {
    let first = classify_wave(w, tols);
    if first.verdict != Verdict::Inconclusive {
        return (first, 1);
    }
    (classify_wave(w, &tols.tightened()), 2)
}

/// How a speed estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedMethod {
    ShootingBisection,
    PdeFront,
}

/// A speed with its bracket and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub method: SpeedMethod,
    pub evaluations: u64,
}

impl SpeedEstimate {
    pub fn bracket_width(&self) -> f64 {
        self.bracket_hi - self.bracket_lo
    }
}

/// Result of a minimal-speed bisection.
#[derive(Debug, Clone)]
pub struct MinSpeedOutcome {
    pub estimate: SpeedEstimate,
    /// True when bisection stopped early on a persistently inconclusive
    /// midpoint; the bracket then carries the residual uncertainty.
    pub stopped_inconclusive: bool,
}

/// Initial upper bracket for the bisection.
///
/// The analytic constructions guarantee existence at `O(rho)` for every
/// `rho` and at `O(rho^{1/3})` (inviscid) or `O(rho^{1/2})` (viscous) for
/// large `rho`; the smaller of the applicable seeds keeps the first shots at
/// speeds whose origin approach fits the `xi` budget, and geometric doubling
/// covers the rest.
fn upper_seed(p: &SystemParams) -> f64 {
    if p.is_inviscid() {
        let linear = 1.1 * (4.0 / 3.0) * p.rho;
        let cubic = 2.0 * 3.0f64.sqrt() * p.rho.cbrt();
        linear.min(cubic).max(4.0)
    } else {
        (2.2 * p.rho.sqrt()).max(4.0)
    }
}

/// Brackets and bisects the classifier transition in `c` to relative width
/// `tol_c`. The returned value is the existing endpoint of the bracket.
///
/// ```
/// use wavespeed::model::SystemParams;
/// use wavespeed::shooting::{min_speed, DEFAULT_TOL_C};
///
/// let p = SystemParams::new(0.0, 0.5).unwrap();
/// let out = min_speed(&p, DEFAULT_TOL_C).unwrap();
/// assert!((out.estimate.value - 2.0).abs() < 5e-3);
/// ```
pub fn min_speed(p: &SystemParams, tol_c: f64) -> ShootResult<MinSpeedOutcome> {
    min_speed_with(p, tol_c, &Tolerances::default())
}

pub fn min_speed_with(
    p: &SystemParams,
    tol_c: f64,
    tols: &Tolerances,
) -> ShootResult<MinSpeedOutcome> {
    if !(tol_c > 0.0) {
        return Err(ShootError::Precondition(format!("tol_c must be > 0, got {tol_c}")));
    }
    let lower_bound =
        if p.is_inviscid() { inviscid_lower_bound(p.rho) } else { viscous_lower_bound(p.rho) };
    let mut evaluations = 0u64;
    let mut classify = |c: f64| -> ShootResult<Verdict> {
        let w = WaveParams::new(*p, c)?;
        let (cls, n) = classify_robust(&w, tols);
        evaluations += n;
        Ok(cls.verdict)
    };

    let mut lo = 0.99 * lower_bound;
    for _ in 0..60 {
        match classify(lo)? {
            Verdict::NotExists => break,
            _ => lo *= 0.9,
        }
        if lo < 0.5 {
            return Err(ShootError::Bracket(
                "no non-existing speed found above 0.5; lower bracket failed".into(),
            ));
        }
    }

    let mut hi = upper_seed(p).max(lo * 1.5);
    loop {
        match classify(hi)? {
            Verdict::Exists => break,
            _ => {
                hi *= 2.0;
                if hi > BRACKET_CEILING {
                    return Err(ShootError::Bracket(format!(
                        "upper bracket grew past {BRACKET_CEILING:.0e} without an existing wave"
                    )));
                }
            }
        }
    }

    let mut stopped_inconclusive = false;
    while hi - lo > tol_c * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        match classify(mid)? {
            Verdict::Exists => hi = mid,
            Verdict::NotExists => lo = mid,
            Verdict::Inconclusive => {
                // classify_robust already retried once with tighter
                // tolerances; keep the midpoint inside the reported bracket.
                stopped_inconclusive = true;
                break;
            }
        }
    }

    Ok(MinSpeedOutcome {
        estimate: SpeedEstimate {
            value: hi,
            bracket_lo: lo,
            bracket_hi: hi,
            method: SpeedMethod::ShootingBisection,
            evaluations,
        },
        stopped_inconclusive,
    })
}

/// One row of a prefactor table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrefactorRow {
    pub nu: f64,
    pub rho: f64,
    pub c_star: Option<f64>,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    /// `c_star / rho^{1/3}`.
    pub prefactor: Option<f64>,
    pub evaluations: u64,
    pub error: Option<String>,
}

/// One `min_speed` call per `rho`, errors recorded per row.
pub fn prefactor_scan(p: &SystemParams, rho_values: &[f64], tol_c: f64, jobs: usize) -> Vec<PrefactorRow> {
    let nu = p.nu;
    let run = |rho: &f64| -> PrefactorRow {
        let rho = *rho;
        match SystemParams::new(nu, rho).map_err(ShootError::from).and_then(|sp| min_speed(&sp, tol_c)) {
            Ok(out) => PrefactorRow {
                nu,
                rho,
                c_star: Some(out.estimate.value),
                bracket_lo: Some(out.estimate.bracket_lo),
                bracket_hi: Some(out.estimate.bracket_hi),
                prefactor: Some(out.estimate.value / rho.cbrt()),
                evaluations: out.estimate.evaluations,
                error: if out.stopped_inconclusive {
                    Some("bisection stopped on inconclusive midpoint".into())
                } else {
                    None
                },
            },
            Err(e) => PrefactorRow {
                nu,
                rho,
                c_star: None,
                bracket_lo: None,
                bracket_hi: None,
                prefactor: None,
                evaluations: 0,
                error: Some(e.to_string()),
            },
        }
    };
    crate::cli::parallel_map(rho_values, jobs, run)
}

/// Result of the threshold bisection in `rho`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub nu: f64,
    /// Smallest sampled `rho` at which the minimal speed exceeds the pulled
    /// value `2` by more than the detection slack.
    pub rho_hat: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub evaluations: u64,
}

/// Bisects in `rho` on the predicate `min_speed(nu, rho) > 2 + 10 tol_c`.
pub fn threshold_rho(nu: f64, tol_rho: f64, tol_c: f64) -> ShootResult<ThresholdEstimate> {
    if !(tol_rho > 0.0) {
        return Err(ShootError::Precondition(format!("tol_rho must be > 0, got {tol_rho}")));
    }
    let cutoff = 2.0 + 10.0 * tol_c;
    let mut evaluations = 0u64;
    let mut pushed = |rho: f64| -> ShootResult<bool> {
        let p = SystemParams::new(nu, rho)?;
        let out = min_speed(&p, tol_c)?;
        evaluations += out.estimate.evaluations;
        Ok(out.estimate.value > cutoff)
    };

    let mut lo = 1.0;
    for _ in 0..20 {
        if !pushed(lo)? {
            break;
        }
        lo *= 0.5;
        if lo < 1e-3 {
            return Err(ShootError::Bracket("threshold below rho = 1e-3".into()));
        }
    }
    let mut hi = 16.0 / 3.0;
    for _ in 0..20 {
        if pushed(hi)? {
            break;
        }
        hi *= 2.0;
        if hi > 1e3 {
            return Err(ShootError::Bracket("threshold above rho = 1e3".into()));
        }
    }
    while hi - lo > tol_rho * hi {
        let mid = 0.5 * (lo + hi);
        if pushed(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdEstimate { nu, rho_hat: hi, bracket_lo: lo, bracket_hi: hi, evaluations })
}

/// Dichotomy outcome for one branch of the high-equilibrium unstable
/// manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HighBranchOutcome {
    /// The temperature was driven negative.
    TNegative,
    /// The velocity approached the wave speed.
    UApproachesC,
    Inconclusive,
}

/// Shoots both branches of the unstable manifold of the high rest state
/// `(1, c + rho + sqrt(c^2 + rho^2))` of the planar system and reports which
/// side of the dichotomy each branch realized. No branch connects to the
/// origin.
pub fn classify_high_equilibrium(
    w: &WaveParams,
    tols: &Tolerances,
) -> ShootResult<[HighBranchOutcome; 2]> {
    if !w.params.is_inviscid() {
        return Err(ShootError::Precondition("the dichotomy is a planar (nu = 0) statement".into()));
    }
    if w.c < 1.0 {
        return Err(ShootError::Precondition(format!("requires c >= 1, got {}", w.c)));
    }
    let u_high = high_equilibrium(w.c, w.rho());
    let eig = eigen_planar_equilibrium(w.c, w.rho(), u_high)?;
    if eig.unstable_count != 1 {
        return Err(ShootError::Model(ModelError::EigenFailure(format!(
            "high equilibrium is not a saddle: {} unstable directions",
            eig.unstable_count
        ))));
    }
    let dir = eig.unstable_direction.expect("saddle has an unstable direction");
    let eq_norm = (1.0 + u_high * u_high).sqrt();
    let offset = default_seed_offset(eq_norm);
    // The proximity threshold sits well outside the finite-xi singular layer
    // so the event fires before step sizes collapse.
    let reach_gap = 1e-4 * w.c.max(1.0);
    let events = [
        Event::t_negative(0.0),
        Event::u_reaches_c(reach_gap),
        Event::near_origin(DEFAULT_ORIGIN_RADIUS),
    ];
    let mut outcomes = [HighBranchOutcome::Inconclusive; 2];
    for (branch, sign) in [1.0f64, -1.0].iter().enumerate() {
        let seed = [1.0 + sign * offset * dir[0], u_high + sign * offset * dir[1]];
        let traj = integrate_until_event(&PlanarSystem(*w), seed, &events, tols);
        outcomes[branch] = match traj {
            Ok(t) => match t.terminal_event {
                EventKind::TNegative => HighBranchOutcome::TNegative,
                EventKind::UReachesC => HighBranchOutcome::UApproachesC,
                _ => HighBranchOutcome::Inconclusive,
            },
            Err(IntegrateError::Field { source: ModelError::Singular { .. }, .. }) => {
                // Ran into the U = c line harder than the event guard; the
                // branch still realized the second alternative.
                HighBranchOutcome::UApproachesC
            }
            Err(IntegrateError::StepUnderflow { state, .. })
                if state.len() >= 2 && (state[1] - w.c).abs() < 1e-3 * w.c.max(1.0) =>
            {
                HighBranchOutcome::UApproachesC
            }
            Err(_) => HighBranchOutcome::Inconclusive,
        };
    }
    Ok(outcomes)
}

/// Monotonicity and ordering diagnostics attached to an extracted profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    /// Largest `T'` over the samples (negative for monotone profiles).
    pub max_t_rate: f64,
    /// Largest `U'` over the samples.
    pub max_u_rate: f64,
    /// Largest `V'` over the samples, for three-dimensional profiles.
    pub max_v_rate: Option<f64>,
    /// Smallest value of `rho T - U` over the samples; nonnegative up to
    /// tolerance on inviscid profiles. The direction follows from the
    /// boundary values (at the left state `rho T - U = rho - u0 > 0`); the
    /// reversed inequality `rho T < U` sometimes quoted for this system is
    /// inconsistent with those limits.
    pub ordering_margin: f64,
    /// Smallest velocity value over the samples.
    pub min_u: f64,
    /// `|U - u0|` at the first sample.
    pub left_endpoint_u_gap: f64,
}

/// A connecting trajectory with its diagnostics.
#[derive(Debug, Clone)]
pub struct Profile {
    pub wave: WaveParams,
    pub trajectory: ProfileTrajectory,
    pub diagnostics: ProfileDiagnostics,
}

/// Classifies the wave and, when it exists, returns the connecting orbit
/// with monotonicity and ordering diagnostics.
pub fn extract_profile(w: &WaveParams, tols: &Tolerances) -> ShootResult<Profile> {
    let cls = classify_wave(w, tols);
    if cls.verdict != Verdict::Exists {
        return Err(ShootError::Precondition(format!(
            "no existing wave at nu = {}, rho = {}, c = {}: verdict {:?} ({})",
            w.nu(),
            w.rho(),
            w.c,
            cls.verdict,
            cls.diagnostic.as_deref().unwrap_or("no diagnostic")
        )));
    }
    let trajectory = cls.trajectory.expect("classification retains the trajectory");
    let rho = w.rho();
    let mut max_t_rate = f64::NEG_INFINITY;
    let mut max_u_rate = f64::NEG_INFINITY;
    let mut max_v_rate = f64::NEG_INFINITY;
    let mut ordering_margin = f64::INFINITY;
    let mut min_u = f64::INFINITY;
    match &trajectory {
        ProfileTrajectory::Planar(t) => {
            for (_, y) in &t.samples {
                let s = PlanarState { t: y[0], u: y[1] };
                if let Ok(d) = planar_field(&s, w) {
                    max_t_rate = max_t_rate.max(d.t);
                    max_u_rate = max_u_rate.max(d.u);
                }
                ordering_margin = ordering_margin.min(rho * y[0] - y[1]);
                min_u = min_u.min(y[1]);
            }
        }
        ProfileTrajectory::Viscous(t) => {
            for (_, y) in &t.samples {
                let s = ViscousState { t: y[0], u: y[1], v: y[2] };
                if let Ok(d) = viscous_field(&s, w) {
                    max_t_rate = max_t_rate.max(d.t);
                    max_u_rate = max_u_rate.max(d.u);
                    max_v_rate = max_v_rate.max(d.v);
                }
                ordering_margin = ordering_margin.min(rho * y[0] - y[1]);
                min_u = min_u.min(y[1]);
            }
        }
    }
    let first_u = match &trajectory {
        ProfileTrajectory::Planar(t) => t.samples[0].1[1],
        ProfileTrajectory::Viscous(t) => t.samples[0].1[1],
    };
    let diagnostics = ProfileDiagnostics {
        max_t_rate,
        max_u_rate,
        max_v_rate: if matches!(trajectory, ProfileTrajectory::Viscous(_)) {
            Some(max_v_rate)
        } else {
            None
        },
        ordering_margin,
        min_u,
        left_endpoint_u_gap: (first_u - w.u0).abs(),
    };
    Ok(Profile { wave: *w, trajectory, diagnostics })
}

/// Decay rate data used for quadrature tail corrections.
pub fn profile_tail_rates(w: &WaveParams) -> ShootResult<(f64, f64)> {
    let eig = eigen_left_equilibrium(w)?;
    let left = unstable_rate(&eig);
    // Slowest decay toward the origin: the quadratic pair contributes
    // (c - sqrt(c^2 - 4))/2, the viscous branch adds c/nu.
    let c = w.c;
    let quad = 0.5 * (c - (c * c - 4.0).max(0.0).sqrt());
    let right = if w.params.is_inviscid() { quad } else { quad.min(c / w.nu()) };
    Ok((left, right))
}
