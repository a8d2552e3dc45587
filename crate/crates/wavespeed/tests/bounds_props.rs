//! Bound-checker properties: margin stability under refinement, consistency
//! between closed-form bounds, trap certificates, and computed speeds, and
//! the integral identities frozen against their closed forms.

use wavespeed::bounds::{
    check_inviscid_trap, check_large_rho_trap, check_small_rho_trap, check_viscous_traps,
    figure1_sweep, inviscid_lower_bound, wave_integral_diagnostics, SampleSpec, TrapRegion,
};
use wavespeed::integrate::Tolerances;
use wavespeed::model::{SystemParams, WaveParams};
use wavespeed::shooting::{extract_profile, min_speed, DEFAULT_TOL_C};

fn wave(nu: f64, rho: f64, c: f64) -> WaveParams {
    WaveParams::new(SystemParams::new(nu, rho).unwrap(), c).unwrap()
}

/// Margins are stable under a 4x grid refinement.
#[test]
fn trap_margins_stable_under_refinement() {
    let coarse = SampleSpec::curve_default();
    let fine = SampleSpec { points_per_axis: 8192, ..SampleSpec::curve_default() };
    for (c, rho) in [(20.0, 1.0), (10.0, 2.0), (4.0, 1.0)] {
        let a = check_inviscid_trap(c, rho, &coarse).unwrap();
        let b = check_inviscid_trap(c, rho, &fine).unwrap();
        assert!((a.margin - b.margin).abs() <= 1e-6, "margin moved {} -> {}", a.margin, b.margin);
        assert_eq!(a.holds, b.holds);
    }
    for (sigma, rho) in [(1.8, 1e6), (2.5, 1e4)] {
        let a = check_large_rho_trap(sigma, rho, &coarse).unwrap();
        let b = check_large_rho_trap(sigma, rho, &fine).unwrap();
        assert!((a.margin - b.margin).abs() <= 1e-6);
        assert_eq!(a.holds, b.holds);
    }
    for rho in [0.5, 1.0, 1.2] {
        let a = check_small_rho_trap(rho, &coarse).unwrap();
        let b = check_small_rho_trap(rho, &fine).unwrap();
        assert!((a.margin - b.margin).abs() <= 1e-6);
        assert_eq!(a.holds, b.holds);
    }
    let face_fine = SampleSpec { points_per_axis: 1024, ..SampleSpec::face_default() };
    let w = wave(1.0, 1.0, 20.0);
    let a = check_viscous_traps(TrapRegion::R1, &w, &SampleSpec::face_default()).unwrap();
    let b = check_viscous_traps(TrapRegion::R1, &w, &face_fine).unwrap();
    assert!((a.margin - b.margin).abs() <= 1e-6);
}

/// Whenever a trap certificate holds at a speed, the computed minimal speed
/// sits at or below it; the closed-form floors sit at or below the computed
/// speed.
#[test]
fn bounds_and_computed_speeds_are_ordered() {
    let curve = SampleSpec::curve_default();
    // Large-rho certificate at sigma = 1.8.
    let rho = 1e3;
    let sigma = 1.8;
    let cert = check_large_rho_trap(sigma, rho, &curve).unwrap();
    assert!(cert.holds);
    let c_star = min_speed(&SystemParams::new(0.0, rho).unwrap(), DEFAULT_TOL_C)
        .unwrap()
        .estimate
        .value;
    assert!(c_star <= sigma * rho.cbrt(), "c* = {c_star} above certified {}", sigma * rho.cbrt());
    assert!(c_star >= inviscid_lower_bound(rho) - 1e-3 * c_star);
    // Fast-wave certificate c = 20 at rho = 1.
    let cert = check_inviscid_trap(20.0, 1.0, &curve).unwrap();
    assert!(cert.holds);
    let c1 = min_speed(&SystemParams::new(0.0, 1.0).unwrap(), DEFAULT_TOL_C)
        .unwrap()
        .estimate
        .value;
    assert!(c1 <= 20.0);
    // Small-rho certificate pins the pulled speed.
    assert!(check_small_rho_trap(0.5, &curve).unwrap().holds);
    let c05 = min_speed(&SystemParams::new(0.0, 0.5).unwrap(), DEFAULT_TOL_C)
        .unwrap()
        .estimate
        .value;
    assert!((c05 - 2.0).abs() < 5e-3);
}

/// Viscous trap reports carry their parameters and margins; regimes where
/// the construction is known to work hold.
#[test]
fn viscous_trap_regimes() {
    let face = SampleSpec::face_default();
    let r1 = check_viscous_traps(TrapRegion::R1, &wave(2.0, 3.0, 40.0), &face).unwrap();
    assert!(r1.holds, "R1 at large speed: margin {}", r1.margin);
    let r2 = check_viscous_traps(TrapRegion::R2, &wave(0.3, 0.02, 2.5), &face).unwrap();
    assert!(r2.holds, "R2 small nu-rho: margin {}", r2.margin);
    let r3 = check_viscous_traps(TrapRegion::R3, &wave(0.5, 1e5, 2.2 * (1e5f64).sqrt()), &face)
        .unwrap();
    assert!(r3.holds, "R3 sigma > 2: margin {}", r3.margin);
    // A speed far below the trap's regime leaves the region leaky.
    let bad = check_viscous_traps(TrapRegion::R1, &wave(1.0, 5.0, 2.2), &face).unwrap();
    assert!(!bad.holds);
}

/// Integral identities against their closed forms at the pulled speed.
#[test]
fn integral_identities_at_pulled_speed() {
    let w = wave(0.0, 1.0, 2.0);
    let profile = extract_profile(&w, &Tolerances::default()).unwrap();
    let reports = wave_integral_diagnostics(&profile).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert!(r.holds, "{}: margin {}", r.name, r.margin);
    }
    // Frozen closed forms: int T(1-T) = c - u0 = sqrt(5) - 1 and
    // int (c-U) T(1-T) = (8 - (sqrt(5)-1)^3)/3.
    let i1 = reports[0].worst_point[0];
    let i2 = reports[2].worst_point[0];
    let target1 = 5.0f64.sqrt() - 1.0;
    let target2 = (8.0 - (5.0f64.sqrt() - 1.0).powi(3)) / 3.0;
    assert!((target1 - 1.2360679774997896).abs() < 1e-15);
    assert!((target2 - 2.037_152_060_000_561).abs() < 1e-14);
    assert!((i1 - target1).abs() <= 1e-4 * target1, "quadrature {i1} vs {target1}");
    assert!((i2 - target2).abs() <= 1e-4 * target2, "quadrature {i2} vs {target2}");
}

/// The half lower bound holds on viscous profiles too.
#[test]
fn half_bound_on_viscous_profile() {
    let profile = extract_profile(&wave(1.0, 1.0, 2.5), &Tolerances::default()).unwrap();
    let reports = wave_integral_diagnostics(&profile).unwrap();
    assert_eq!(reports.len(), 2, "no cubic identity for viscous profiles");
    for r in &reports {
        assert!(r.holds, "{}: margin {}", r.name, r.margin);
    }
}

/// Small speed-surface sweep: cells fill, findings list any monotonicity
/// violations instead of failing the sweep.
#[test]
fn speed_surface_sweep_smoke() {
    let table = figure1_sweep(&[0.0, 1.0], &[0.5, 2.0, 8.0], DEFAULT_TOL_C, 2);
    assert_eq!(table.cells.len(), 6);
    for cell in &table.cells {
        let speed = cell.speed.expect("every cell solvable");
        assert!(speed >= 2.0 - 1e-3, "cell ({}, {}) speed {speed}", cell.nu, cell.rho);
        assert!(cell.error.is_none());
    }
    for finding in &table.findings {
        println!("finding: {finding}");
    }
    // rho = 8 is in the pushed regime for both viscosities.
    assert!(table.cells[2].speed.unwrap() > 2.05);
    assert!(table.cells[5].speed.unwrap() > 2.05);
}

/// Report serialization carries the documented fields.
#[test]
fn report_serialization_schema() {
    let rep = check_inviscid_trap(20.0, 1.0, &SampleSpec::curve_default()).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    for key in ["name", "holds", "margin", "worst_point", "params", "spec"] {
        assert!(json.get(key).is_some(), "missing key {key}");
    }
}
