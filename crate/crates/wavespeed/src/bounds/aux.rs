//! Sampling-based falsification of auxiliary functions.
//!
//! An auxiliary function `H` certifies forward invariance of its nonpositive
//! sublevel set through the differential inequality
//! `lambda F(y) . grad H(y) <= -H(y)` (or the `+H` variant), combined with
//! boundary and equality conditions that separate the equilibria. This
//! module checks a *given* `H` against the four condition templates on a
//! sampled region; it never searches for certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BoundReport, BoundsError, BoundsResult, SampleSpec};
use crate::model::WaveParams;

/// Tolerance for the equality conditions pinning `H` at an equilibrium.
pub const EQUALITY_TOL: f64 = 1e-10;

/// The four condition templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxTemplate {
    /// Planar existence certificate (upper speed bound).
    InvUpper,
    /// Planar non-existence certificate (lower speed bound).
    InvLower,
    /// Three-dimensional existence certificate.
    VisUpper,
    /// Three-dimensional non-existence certificate.
    VisLower,
}

impl AuxTemplate {
    pub fn dimension(&self) -> usize {
        match self {
            Self::InvUpper | Self::InvLower => 2,
            Self::VisUpper | Self::VisLower => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::InvUpper => "aux_inv_upper",
            Self::InvLower => "aux_inv_lower",
            Self::VisUpper => "aux_vis_upper",
            Self::VisLower => "aux_vis_lower",
        }
    }
}

/// A polynomial auxiliary function in 2 or 3 variables with its rate
/// constant `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxFunction {
    pub variables: usize,
    pub degree: u32,
    /// Monomial exponents (unused trailing entries zero) mapped to
    /// coefficients.
    pub coefficients: BTreeMap<[u32; 3], f64>,
    pub lambda: f64,
}

impl AuxFunction {
    pub fn new(
        variables: usize,
        terms: impl IntoIterator<Item = ([u32; 3], f64)>,
        lambda: f64,
    ) -> BoundsResult<Self> {
        if variables != 2 && variables != 3 {
            return Err(BoundsError::Domain(format!("H must have 2 or 3 variables, got {variables}")));
        }
        if !(lambda > 0.0) {
            return Err(BoundsError::Domain(format!("lambda must be > 0, got {lambda}")));
        }
        let mut coefficients = BTreeMap::new();
        let mut degree = 0;
        for (exps, coeff) in terms {
            if variables == 2 && exps[2] != 0 {
                return Err(BoundsError::Domain(
                    "third exponent must be zero for a two-variable H".into(),
                ));
            }
            if coeff == 0.0 {
                continue;
            }
            degree = degree.max(exps.iter().sum::<u32>());
            *coefficients.entry(exps).or_insert(0.0) += coeff;
        }
        Ok(Self { variables, degree, coefficients, lambda })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (exps, coeff) in &self.coefficients {
            let mut term = *coeff;
            for (i, &e) in exps.iter().take(self.variables).enumerate() {
                term *= y[i].powi(e as i32);
            }
            acc += term;
        }
        acc
    }

    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.variables];
        for (exps, coeff) in &self.coefficients {
            for (axis, slot) in g.iter_mut().enumerate() {
                let e = exps[axis];
                if e == 0 {
                    continue;
                }
                let mut term = *coeff * e as f64;
                for (i, &ei) in exps.iter().take(self.variables).enumerate() {
                    let p = if i == axis { ei - 1 } else { ei };
                    term *= y[i].powi(p as i32);
                }
                *slot += term;
            }
        }
        g
    }

    /// Writes the plain-text map format accepted by [`AuxFunction::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("lambda {:.16e}\n", self.lambda);
        for (exps, coeff) in &self.coefficients {
            for e in exps.iter().take(self.variables) {
                out.push_str(&format!("{e} "));
            }
            out.push_str(&format!("{coeff:.16e}\n"));
        }
        out
    }

    /// Parses the plain-text map format: one `e1 e2 [e3] coefficient` line
    /// per monomial, an optional `lambda <value>` line, `#` comments.
    pub fn parse(text: &str) -> BoundsResult<Self> {
        let mut lambda = 1.0;
        let mut terms: Vec<([u32; 3], f64)> = Vec::new();
        let mut variables = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens[0].eq_ignore_ascii_case("lambda") {
                if tokens.len() != 2 {
                    return Err(BoundsError::Domain(format!(
                        "line {}: lambda takes one value",
                        lineno + 1
                    )));
                }
                lambda = tokens[1]
                    .parse()
                    .map_err(|_| BoundsError::Domain(format!("line {}: bad lambda", lineno + 1)))?;
                continue;
            }
            let nvars = tokens.len() - 1;
            if nvars != 2 && nvars != 3 {
                return Err(BoundsError::Domain(format!(
                    "line {}: expected 2 or 3 exponents and a coefficient",
                    lineno + 1
                )));
            }
            match variables {
                None => variables = Some(nvars),
                Some(v) if v != nvars => {
                    return Err(BoundsError::Domain(format!(
                        "line {}: mixed term dimensions {v} and {nvars}",
                        lineno + 1
                    )))
                }
                _ => {}
            }
            let mut exps = [0u32; 3];
            for (i, tok) in tokens[..nvars].iter().enumerate() {
                exps[i] = tok.parse().map_err(|_| {
                    BoundsError::Domain(format!("line {}: bad exponent '{tok}'", lineno + 1))
                })?;
            }
            let coeff: f64 = tokens[nvars].parse().map_err(|_| {
                BoundsError::Domain(format!("line {}: bad coefficient", lineno + 1))
            })?;
            terms.push((exps, coeff));
        }
        let variables =
            variables.ok_or_else(|| BoundsError::Domain("no monomial lines found".into()))?;
        Self::new(variables, terms, lambda)
    }
}

/// Example degree-2 certificate for the planar existence template at
/// `(nu, rho, c) = (0, 1, 2.05)`, fitted offline by a linear program
/// maximizing the worst condition slack over a sampled box.
pub fn example_inv_upper() -> AuxFunction {
    AuxFunction::new(
        2,
        [
            ([1, 0, 0], 4.893),
            ([0, 1, 0], -10.0),
            ([2, 0, 0], 9.108),
            ([1, 1, 0], -10.0),
            ([0, 2, 0], -10.0),
        ],
        0.95,
    )
    .expect("example certificate is well-formed")
}

/// Per-condition slack breakdown behind an auxiliary-function report.
#[derive(Debug, Clone, Serialize)]
pub struct AuxReport {
    pub report: BoundReport,
    /// Name of the condition realizing the worst margin.
    pub binding_condition: String,
    pub condition_margins: BTreeMap<String, f64>,
}

struct ConditionTracker {
    margins: BTreeMap<String, f64>,
    worst_points: BTreeMap<String, Vec<f64>>,
}

impl ConditionTracker {
    fn new() -> Self {
        Self { margins: BTreeMap::new(), worst_points: BTreeMap::new() }
    }

    fn observe(&mut self, name: &str, slack: f64, point: &[f64]) {
        let entry = self.margins.entry(name.to_string()).or_insert(f64::INFINITY);
        if slack < *entry {
            *entry = slack;
            self.worst_points.insert(name.to_string(), point.to_vec());
        }
    }

    /// Equality conditions only bind when violated; a satisfied equality
    /// must not clamp the report margin to zero.
    fn observe_equality(&mut self, name: &str, residual: f64, point: &[f64]) {
        let slack = if residual.abs() <= EQUALITY_TOL { f64::INFINITY } else { -residual.abs() };
        self.observe(name, slack, point);
    }

    fn finish(
        self,
        name: &str,
        params: BTreeMap<String, f64>,
        spec: SampleSpec,
    ) -> AuxReport {
        let (binding, margin) = self
            .margins
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k.clone(), *v))
            .unwrap_or(("none".to_string(), f64::INFINITY));
        let worst_point = self.worst_points.get(&binding).cloned().unwrap_or_default();
        AuxReport {
            report: BoundReport::new(name, margin, worst_point, params, spec),
            binding_condition: binding,
            condition_margins: self.margins,
        }
    }
}

fn grid(n: usize, hi: f64) -> Vec<f64> {
    let step = if n > 1 { hi / (n - 1) as f64 } else { 0.0 };
    (0..n).map(|i| step * i as f64).collect()
}

/// Checks every inequality of the chosen template for the given `H` at the
/// parameters of `w`, sampling the box or cube per `spec`. This is a
/// falsifier: `holds` means no sampled violation, not a certificate.
pub fn check_aux_conditions(
    template: AuxTemplate,
    h: &AuxFunction,
    w: &WaveParams,
    spec: &SampleSpec,
) -> BoundsResult<AuxReport> {
    spec.validate()?;
    if h.variables != template.dimension() {
        return Err(BoundsError::Domain(format!(
            "template {:?} needs {} variables, H has {}",
            template,
            template.dimension(),
            h.variables
        )));
    }
    if template.dimension() == 3 && w.params.is_inviscid() {
        return Err(BoundsError::Domain(
            "three-dimensional templates need nu > 0".into(),
        ));
    }
    let (c, rho, nu) = (w.c, w.rho(), w.nu());
    let u0 = w.u0;
    let d = w.c_minus_u0();
    let lambda = h.lambda;
    let eps = spec.epsilon;
    let n = spec.points_per_axis;
    let mut tracker = ConditionTracker::new();

    match template {
        AuxTemplate::InvUpper | AuxTemplate::InvLower => {
            let sign = if template == AuxTemplate::InvUpper { 1.0 } else { -1.0 };
            for &t in &grid(n, 1.0) {
                for &u in &grid(n, u0) {
                    let y = [t, u];
                    let g = h.grad(&y);
                    let hv = h.eval(&y);
                    // Planar flow inequality multiplied through by (c - U)
                    // so every factor is polynomial.
                    let t_dot = -c * t + u * t + u / (2.0 * rho) * (2.0 * c - u);
                    let flow = -lambda * ((c - u) * t_dot * g[0] + rho * t * (t - 1.0) * g[1]);
                    tracker.observe("flow", flow - sign * (c - u) * hv, &y);
                }
            }
            for &t in &grid(n, 1.0) {
                let hv = h.eval(&[t, 0.0]);
                let rhs = eps * t * (1.0 - t);
                let slack = match template {
                    AuxTemplate::InvUpper => hv - rhs,
                    _ => -hv - rhs,
                };
                tracker.observe("exit_face", slack, &[t, 0.0]);
            }
            match template {
                AuxTemplate::InvUpper => {
                    tracker.observe("source_interior", -eps - h.eval(&[1.0, u0]), &[1.0, u0]);
                    tracker.observe_equality("origin_pinned", h.eval(&[0.0, 0.0]), &[0.0, 0.0]);
                }
                _ => {
                    tracker.observe_equality("source_pinned", h.eval(&[1.0, u0]), &[1.0, u0]);
                    tracker.observe("origin_excluded", h.eval(&[0.0, 0.0]) - eps, &[0.0, 0.0]);
                }
            }
        }
        AuxTemplate::VisUpper | AuxTemplate::VisLower => {
            for &t in &grid(n, 1.0) {
                for &u in &grid(n, u0) {
                    for &v in &grid(n, d) {
                        let y = [t, u, v];
                        let g = h.grad(&y);
                        let hv = h.eval(&y);
                        let f = [
                            -c * t + u * t + v,
                            (-c * u + 0.5 * u * u + rho * v) / nu,
                            t * (t - 1.0),
                        ];
                        let flow = -lambda * (f[0] * g[0] + f[1] * g[1] + f[2] * g[2]);
                        tracker.observe("flow", flow - hv, &y);
                    }
                }
            }
            match template {
                AuxTemplate::VisUpper => {
                    for &t in &grid(n, 1.0) {
                        for &u in &grid(n, u0) {
                            let hv = h.eval(&[t, u, 0.0]);
                            let rhs = eps * (t * (1.0 - t) + u * (u0 - u));
                            tracker.observe("exit_face", hv - rhs, &[t, u, 0.0]);
                        }
                    }
                    tracker.observe(
                        "source_interior",
                        -eps - h.eval(&[1.0, u0, d]),
                        &[1.0, u0, d],
                    );
                    tracker.observe_equality("origin_pinned", h.eval(&[0.0, 0.0, 0.0]), &[0.0; 3]);
                }
                _ => {
                    tracker.observe(
                        "source_interior",
                        -eps - h.eval(&[1.0, u0, d]),
                        &[1.0, u0, d],
                    );
                    tracker.observe_equality("origin_pinned", h.eval(&[0.0, 0.0, 0.0]), &[0.0; 3]);
                    for &t in &grid(n, spec.delta) {
                        for &u in &grid(n, spec.delta) {
                            for &v in &grid(n, spec.delta) {
                                tracker.observe(
                                    "origin_neighborhood",
                                    h.eval(&[t, u, v]),
                                    &[t, u, v],
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    let params: BTreeMap<String, f64> = [
        ("nu".to_string(), nu),
        ("rho".to_string(), rho),
        ("c".to_string(), c),
        ("u0".to_string(), u0),
        ("lambda".to_string(), lambda),
    ]
    .into_iter()
    .collect();
    Ok(tracker.finish(template.name(), params, spec.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;

    fn wave(nu: f64, rho: f64, c: f64) -> WaveParams {
        WaveParams::new(SystemParams::new(nu, rho).unwrap(), c).unwrap()
    }

    fn constant(vars: usize, value: f64) -> AuxFunction {
        AuxFunction::new(vars, [([0, 0, 0], value)], 1.0).unwrap()
    }

    #[test]
    fn constant_negative_fails_on_exit_face() {
        let w = wave(0.0, 1.0, 2.05);
        let spec = SampleSpec { points_per_axis: 64, ..SampleSpec::face_default() };
        let rep = check_aux_conditions(AuxTemplate::InvUpper, &constant(2, -1.0), &w, &spec).unwrap();
        assert!(!rep.report.holds);
        assert_eq!(rep.binding_condition, "exit_face");
        // The flow condition itself is satisfied by a constant.
        assert!(rep.condition_margins["flow"] >= 0.0);
    }

    #[test]
    fn constant_positive_fails_on_flow() {
        let w = wave(0.0, 1.0, 2.05);
        let spec = SampleSpec { points_per_axis: 64, ..SampleSpec::face_default() };
        let rep = check_aux_conditions(AuxTemplate::InvUpper, &constant(2, 1.0), &w, &spec).unwrap();
        assert!(!rep.report.holds);
        assert!(rep.condition_margins["flow"] < 0.0);
    }

    #[test]
    fn fitted_example_certificate_holds() {
        let spec2 = SampleSpec { points_per_axis: 512, ..SampleSpec::face_default() };
        let w2 = wave(0.0, 1.0, 2.05);
        let rep = check_aux_conditions(AuxTemplate::InvUpper, &example_inv_upper(), &w2, &spec2)
            .unwrap();
        assert!(rep.report.holds, "binding {}: {}", rep.binding_condition, rep.report.margin);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let w = wave(0.0, 1.0, 2.05);
        let spec = SampleSpec::face_default();
        assert!(check_aux_conditions(AuxTemplate::VisUpper, &constant(2, -1.0), &w, &spec).is_err());
    }

    #[test]
    fn text_round_trip_preserves_function() {
        let h = AuxFunction::new(
            3,
            [([2, 0, 1], 0.125), ([0, 1, 0], -3.5), ([1, 1, 1], 1.0 / 3.0)],
            0.7,
        )
        .unwrap();
        let back = AuxFunction::parse(&h.to_text()).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn parse_round_trip() {
        let text = "# constant\nlambda 0.5\n0 0 -1.0\n2 0 3.0\n";
        let h = AuxFunction::parse(text).unwrap();
        assert_eq!(h.variables, 2);
        assert_eq!(h.lambda, 0.5);
        assert_eq!(h.degree, 2);
        assert_eq!(h.eval(&[2.0, 0.0]), -1.0 + 3.0 * 4.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = AuxFunction::new(
            3,
            [([1, 0, 0], 2.0), ([0, 2, 1], -1.5), ([1, 1, 1], 0.25)],
            1.0,
        )
        .unwrap();
        let y = [0.3, 0.7, 0.2];
        let g = h.grad(&y);
        let step = 1e-6;
        for i in 0..3 {
            let mut hi = y;
            let mut lo = y;
            hi[i] += step;
            lo[i] -= step;
            let fd = (h.eval(&hi) - h.eval(&lo)) / (2.0 * step);
            assert!((g[i] - fd).abs() < 1e-8, "axis {i}: {} vs {fd}", g[i]);
        }
    }
}
