//! Acceptance suite: every criterion at its stated tolerance, one pass/fail
//! line per criterion (run with `--nocapture` to see them).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavespeed::bounds::aux::{check_aux_conditions, AuxFunction, AuxTemplate};
use wavespeed::bounds::{inviscid_lower_bound, viscous_lower_bound, wave_integral_diagnostics, SampleSpec};
use wavespeed::integrate::{integrate_until_event, Event, Tolerances};
use wavespeed::model::{
    conserved_full, conserved_planar, eigen_planar_origin, eigen_viscous_origin, reduce_v,
    FullViscousSystem, InviscidFluxSystem, SystemParams, WaveParams,
};
use wavespeed::pde::{estimate_speed, simulate, SimConfig};
use wavespeed::shooting::{extract_profile, min_speed, threshold_rho, Profile, DEFAULT_TOL_C};

fn params(nu: f64, rho: f64) -> SystemParams {
    SystemParams::new(nu, rho).unwrap()
}

fn wave(nu: f64, rho: f64, c: f64) -> WaveParams {
    WaveParams::new(params(nu, rho), c).unwrap()
}

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {n:02} {name}: {status} ({detail})");
    assert!(pass, "criterion {n} {name}: {detail}");
}

#[test]
fn acceptance_01_small_rho_threshold() {
    let mut detail = String::new();
    let mut pass = true;
    for rho in [0.25, 0.5, 1.0] {
        let c = min_speed(&params(0.0, rho), DEFAULT_TOL_C).unwrap().estimate.value;
        pass &= (c - 2.0).abs() <= 5e-3;
        detail.push_str(&format!("c*({rho}) = {c:.5}; "));
    }
    report(1, "small-rho minimal speed = 2", pass, &detail);
}

/// Reference prefactor windows, inviscid block.
const INVISCID_WINDOWS: [(f64, f64, f64); 3] =
    [(1e2, 1.152, 1.169), (1e3, 1.142, 1.154), (1e4, 1.141, 1.150)];

#[test]
fn acceptance_02_inviscid_prefactors() {
    let mut detail = String::new();
    let mut pass = true;
    for (rho, lo, hi) in INVISCID_WINDOWS {
        let c = min_speed(&params(0.0, rho), DEFAULT_TOL_C).unwrap().estimate.value;
        let pf = c / rho.cbrt();
        pass &= pf >= lo - 0.002 && pf <= hi + 0.002;
        detail.push_str(&format!("rho={rho:.0e}: {pf:.4} in [{lo}, {hi}]+-0.002; "));
    }
    report(2, "inviscid prefactors", pass, &detail);
}

/// Reference prefactor windows at rho = 100 for the three viscosities.
const VISCOUS_WINDOWS: [(f64, f64, f64); 3] =
    [(0.1, 1.140, 1.190), (1.0, 1.331, 1.357), (10.0, 1.862, 1.862)];

#[test]
fn acceptance_03_viscous_prefactors() {
    let rho = 1e2;
    let mut detail = String::new();
    let mut pass = true;
    for (nu, lo, hi) in VISCOUS_WINDOWS {
        let c = min_speed(&params(nu, rho), DEFAULT_TOL_C).unwrap().estimate.value;
        let pf = c / rho.cbrt();
        pass &= pf >= lo - 0.01 && pf <= hi + 0.01;
        detail.push_str(&format!("nu={nu}: {pf:.4} in [{lo}, {hi}]+-0.01; "));
    }
    report(3, "viscous prefactors", pass, &detail);
}

#[test]
fn acceptance_04_pde_spreading_speed_and_plateau() {
    let out = simulate(&params(1.0, 1.0), &SimConfig::default()).unwrap();
    let speed = estimate_speed(&out.track, 0.4).unwrap().value;
    let plateau = out.track.final_plateau().unwrap();
    let pass = (speed - 2.0).abs() <= 0.05 && (plateau - 0.764).abs() <= 0.005;
    report(
        4,
        "pde speed and plateau",
        pass,
        &format!("speed = {speed:.4} (2.00 +- 0.05), plateau = {plateau:.4} (0.764 +- 0.005)"),
    );
}

#[test]
fn acceptance_05_threshold_location() {
    let est = threshold_rho(0.0, 0.02, DEFAULT_TOL_C).unwrap();
    let pass =
        est.rho_hat >= 1.0 && est.rho_hat <= 16.0 / 3.0 && (est.rho_hat - 2.5).abs() <= 0.5;
    report(
        5,
        "pulled-to-pushed threshold",
        pass,
        &format!("rho_hat = {:.4} in [1, 16/3] and 2.5 +- 0.5", est.rho_hat),
    );
}

#[test]
fn acceptance_06_lower_bound_safety() {
    let mut detail = String::new();
    let mut pass = true;
    for rho in [0.25, 0.5, 1.0, 1e2, 1e3, 1e4] {
        let c = min_speed(&params(0.0, rho), DEFAULT_TOL_C).unwrap().estimate.value;
        let floor = inviscid_lower_bound(rho);
        pass &= c >= floor - 1e-3 * c;
        detail.push_str(&format!("nu=0 rho={rho:.2e}: {c:.4} >= {floor:.4}; "));
    }
    for nu in [0.1, 1.0, 10.0] {
        let c = min_speed(&params(nu, 1e2), DEFAULT_TOL_C).unwrap().estimate.value;
        let floor = viscous_lower_bound(1e2);
        pass &= c >= floor - 1e-3 * c;
        detail.push_str(&format!("nu={nu} rho=1e2: {c:.4} >= {floor:.4}; "));
    }
    // The threshold location itself.
    let est = threshold_rho(0.0, 0.02, DEFAULT_TOL_C).unwrap();
    let c = min_speed(&params(0.0, est.rho_hat), DEFAULT_TOL_C).unwrap().estimate.value;
    let floor = inviscid_lower_bound(est.rho_hat);
    pass &= c >= floor - 1e-3 * c;
    detail.push_str(&format!("rho_hat={:.3}: {c:.4} >= {floor:.4}", est.rho_hat));
    report(6, "lower-bound safety", pass, &detail);
}

fn inviscid_profile(rho: f64, c: f64) -> Profile {
    extract_profile(&wave(0.0, rho, c), &Tolerances::default()).unwrap()
}

#[test]
fn acceptance_07_integral_identities() {
    let mut detail = String::new();
    let mut pass = true;
    let c_star_1e3 = min_speed(&params(0.0, 1e3), DEFAULT_TOL_C).unwrap().estimate.value;
    let profiles = [inviscid_profile(1.0, 2.0), inviscid_profile(1e3, c_star_1e3)];
    for profile in &profiles {
        let reports = wave_integral_diagnostics(profile).unwrap();
        for rep in &reports {
            pass &= rep.holds;
            detail.push_str(&format!(
                "{}(rho={}, c={:.4}): margin {:+.2e}; ",
                rep.name,
                profile.wave.rho(),
                profile.wave.c,
                rep.margin
            ));
        }
    }
    report(7, "integral identities", pass, &detail);
}

#[test]
fn acceptance_08_conservation() {
    let mut pass = true;
    let mut detail = String::new();
    // Planar conserved quantity on the test orbit set.
    for (rho, c, start) in [
        (1.0, 2.5, [0.9, 0.2, 0.8]),
        (0.5, 3.0, [0.7, 0.1, 0.4]),
        (1.0, 2.0, [0.95, 0.3, reduce_v(0.3, 2.0, 1.0)]),
    ] {
        let w = wave(0.0, rho, c);
        let tols = Tolerances { xi_budget: 25.0, ..Default::default() };
        let traj = integrate_until_event(
            &InviscidFluxSystem(w),
            start,
            &[Event::near_origin(1e-6), Event::u_below(-0.5)],
            &tols,
        )
        .unwrap();
        let initial = conserved_planar(start[1], start[2], c, rho);
        let drift = traj
            .samples
            .iter()
            .map(|(_, y)| (conserved_planar(y[1], y[2], c, rho) - initial).abs())
            .fold(0.0, f64::max);
        pass &= drift <= 1e-8 * (1.0 + initial.abs());
        detail.push_str(&format!("planar drift {drift:.2e}; "));
    }
    // Flux-difference conservation in the four-dimensional system.
    for (nu, rho, c, dw) in [(1.0, 1.0, 2.5, 0.0), (0.5, 2.0, 3.0, 0.3)] {
        let w = wave(nu, rho, c);
        let eq = w.viscous_equilibrium();
        let start = [0.95, 0.9 * eq.u, 0.9 * eq.v, rho * 0.9 * eq.v + dw];
        let tols = Tolerances { xi_budget: 25.0, ..Default::default() };
        let traj =
            integrate_until_event(&FullViscousSystem(w), start, &[Event::near_origin(1e-6)], &tols)
                .unwrap();
        let initial = conserved_full(start[2], start[3], rho);
        let drift = traj
            .samples
            .iter()
            .map(|(_, y)| (conserved_full(y[2], y[3], rho) - initial).abs())
            .fold(0.0, f64::max);
        pass &= drift <= 1e-8;
        detail.push_str(&format!("flux drift {drift:.2e}; "));
    }
    report(8, "conserved quantities under integration", pass, &detail);
}

#[test]
fn acceptance_09_wave_structure_and_regime_switch() {
    let mut pass = true;
    let mut detail = String::new();
    // Monotone decreasing components and the ordering 0 <= U <= rho T on
    // inviscid profiles; viscous profiles carry the monotonicity statement.
    for (rho, c) in [(1.0, 2.0), (0.5, 2.0), (1e2, 5.5)] {
        let p = inviscid_profile(rho, c);
        let d = &p.diagnostics;
        pass &= d.max_t_rate <= 1e-10 && d.max_u_rate <= 1e-10;
        pass &= d.min_u >= -1e-8 && d.ordering_margin >= -1e-8;
        detail.push_str(&format!(
            "inviscid (rho={rho}, c={c}): ordering margin {:+.2e}; ",
            d.ordering_margin
        ));
    }
    let viscous = extract_profile(&wave(1.0, 1.0, 2.5), &Tolerances::default()).unwrap();
    let d = &viscous.diagnostics;
    pass &= d.max_t_rate <= 1e-10 && d.max_u_rate <= 1e-10 && d.max_v_rate.unwrap() <= 1e-10;
    detail.push_str("viscous monotone; ");
    // Eigenvalue regime switch at c = 2 in both linearizations.
    for c in [1.9, 1.99] {
        pass &= eigen_planar_origin(c).unwrap().eigenvalues.iter().any(|l| l.im != 0.0);
        pass &= eigen_viscous_origin(c, 1.0).unwrap().eigenvalues.iter().any(|l| l.im != 0.0);
    }
    for c in [2.0, 2.1] {
        pass &= eigen_planar_origin(c).unwrap().eigenvalues.iter().all(|l| l.im == 0.0);
        pass &= eigen_viscous_origin(c, 1.0).unwrap().eigenvalues.iter().all(|l| l.im == 0.0);
    }
    detail.push_str("regime switch at c = 2");
    report(9, "wave structure and origin regimes", pass, &detail);
}

/// Independent brute-force evaluation of the template conditions on a dense
/// grid, written directly from the condition formulas.
fn brute_force_holds(template: AuxTemplate, h: &AuxFunction, w: &WaveParams, n: usize) -> bool {
    let (c, rho, nu) = (w.c, w.rho(), w.nu());
    let u0 = w.u0;
    let d = w.c_minus_u0();
    let eps = 1e-4;
    let delta = 0.05;
    let lam = h.lambda;
    let grid = |hi: f64, m: usize| (0..m).map(move |i| hi * i as f64 / (m - 1) as f64);
    match template {
        AuxTemplate::InvUpper | AuxTemplate::InvLower => {
            let sign = if template == AuxTemplate::InvUpper { 1.0 } else { -1.0 };
            for t in grid(1.0, n) {
                for u in grid(u0, n) {
                    let g = h.grad(&[t, u]);
                    let hv = h.eval(&[t, u]);
                    let tdot = -c * t + u * t + u / (2.0 * rho) * (2.0 * c - u);
                    let flow =
                        -lam * ((c - u) * tdot * g[0] + rho * t * (t - 1.0) * g[1]);
                    if flow - sign * (c - u) * hv < 0.0 {
                        return false;
                    }
                }
            }
            for t in grid(1.0, n) {
                let hv = h.eval(&[t, 0.0]);
                let rhs = eps * t * (1.0 - t);
                let ok = match template {
                    AuxTemplate::InvUpper => hv >= rhs,
                    _ => -hv >= rhs,
                };
                if !ok {
                    return false;
                }
            }
            match template {
                AuxTemplate::InvUpper => {
                    h.eval(&[1.0, u0]) <= -eps && h.eval(&[0.0, 0.0]).abs() <= 1e-10
                }
                _ => h.eval(&[1.0, u0]).abs() <= 1e-10 && h.eval(&[0.0, 0.0]) >= eps,
            }
        }
        AuxTemplate::VisUpper | AuxTemplate::VisLower => {
            for t in grid(1.0, n) {
                for u in grid(u0, n) {
                    for v in grid(d, n) {
                        let g = h.grad(&[t, u, v]);
                        let hv = h.eval(&[t, u, v]);
                        let f = [
                            -c * t + u * t + v,
                            (-c * u + 0.5 * u * u + rho * v) / nu,
                            t * (t - 1.0),
                        ];
                        if -lam * (f[0] * g[0] + f[1] * g[1] + f[2] * g[2]) - hv < 0.0 {
                            return false;
                        }
                    }
                }
            }
            if h.eval(&[1.0, u0, d]) > -eps || h.eval(&[0.0, 0.0, 0.0]).abs() > 1e-10 {
                return false;
            }
            match template {
                AuxTemplate::VisUpper => {
                    for t in grid(1.0, n) {
                        for u in grid(u0, n) {
                            if h.eval(&[t, u, 0.0]) < eps * (t * (1.0 - t) + u * (u0 - u)) {
                                return false;
                            }
                        }
                    }
                    true
                }
                _ => {
                    for t in grid(delta, n) {
                        for u in grid(delta, n) {
                            for v in grid(delta, n) {
                                if h.eval(&[t, u, v]) < 0.0 {
                                    return false;
                                }
                            }
                        }
                    }
                    true
                }
            }
        }
    }
}

fn random_aux(rng: &mut ChaCha8Rng, vars: usize) -> AuxFunction {
    let mut terms = Vec::new();
    let max_e = 3u32;
    for e0 in 0..=max_e {
        for e1 in 0..=(max_e - e0) {
            let top = if vars == 3 { max_e - e0 - e1 } else { 0 };
            for e2 in 0..=top {
                if e0 + e1 + e2 == 0 {
                    continue; // constant stays zero so the pinned conditions vary
                }
                if rng.gen_bool(0.6) {
                    terms.push(([e0, e1, e2], rng.gen_range(-1.0..1.0)));
                }
            }
        }
    }
    if terms.is_empty() {
        terms.push(([1, 0, 0], rng.gen_range(-1.0..1.0)));
    }
    let lambda = rng.gen_range(0.1..2.0);
    AuxFunction::new(vars, terms, lambda).unwrap()
}

#[test]
fn acceptance_10_aux_checker_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260809);
    let w2 = wave(0.0, 1.0, 2.05);
    let w3 = wave(1.0, 1.0, 2.5);
    let mut checked = 0usize;
    let mut holds_seen = 0usize;
    let mut detail = String::new();
    let mut pass = true;
    while checked < 20 {
        let three_d = checked % 2 == 1;
        let (vars, w, template, ppa, brute_n) = if three_d {
            let t = if checked % 4 == 1 { AuxTemplate::VisUpper } else { AuxTemplate::VisLower };
            (3, &w3, t, 16, 160)
        } else {
            let t = if checked.is_multiple_of(4) { AuxTemplate::InvUpper } else { AuxTemplate::InvLower };
            (2, &w2, t, 64, 640)
        };
        let h = random_aux(&mut rng, vars);
        let spec = SampleSpec { points_per_axis: ppa, ..SampleSpec::face_default() };
        let rep = check_aux_conditions(template, &h, w, &spec).unwrap();
        // The equivalence presumes stable margins; near-ties between grid
        // densities are redrawn rather than compared.
        if rep.report.margin.abs() < 5e-3 {
            continue;
        }
        let brute = brute_force_holds(template, &h, w, brute_n);
        if rep.report.holds != brute {
            pass = false;
            detail.push_str(&format!(
                "mismatch on {:?} (margin {:+.3e}): checker {} vs brute {brute}; ",
                template, rep.report.margin, rep.report.holds
            ));
        }
        holds_seen += usize::from(rep.report.holds);
        checked += 1;
    }
    // Random polynomials essentially never satisfy a certificate, so the
    // holding side of the agreement is exercised with the fitted example.
    let fitted = wavespeed::bounds::aux::example_inv_upper();
    let spec = SampleSpec { points_per_axis: 128, ..SampleSpec::face_default() };
    let rep = check_aux_conditions(AuxTemplate::InvUpper, &fitted, &w2, &spec).unwrap();
    let brute = brute_force_holds(AuxTemplate::InvUpper, &fitted, &w2, 1280);
    if !(rep.report.holds && brute) {
        pass = false;
        detail.push_str(&format!(
            "fitted certificate disagreement: checker {} vs brute {brute}; ",
            rep.report.holds
        ));
    }
    detail.push_str(&format!(
        "20 randomized H checked, {holds_seen} held; fitted certificate agreed on holds"
    ));
    report(10, "aux falsifier vs brute force", pass, &detail);
}
