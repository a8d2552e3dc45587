//! Command-line surface: minimal speeds, PDE runs, tables, and bound
//! verification.

// Validations are written as `!(x > 0.0)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use wavespeed::bounds::aux::{check_aux_conditions, AuxFunction, AuxTemplate};
use wavespeed::bounds::{
    check_inviscid_trap, check_large_rho_trap, check_small_rho_trap, check_viscous_traps,
    figure1_sweep, wave_integral_diagnostics, BoundReport, SampleSpec, TrapRegion,
};
use wavespeed::cli::{
    parse_config_file, parse_value_list, params_key, write_front_csv, write_reports_json,
    write_snapshot_csv, write_speed_csv, write_speed_json, write_sweep_csv, write_threshold_csv,
    ResultCache, RunRecord, SpeedRow,
};
use wavespeed::integrate::Tolerances;
use wavespeed::model::{SystemParams, WaveParams};
use wavespeed::pde::{estimate_speed, simulate, IcKind, PdeError, SimConfig};
use wavespeed::shooting::{
    extract_profile, min_speed, prefactor_scan, threshold_rho, MinSpeedOutcome, ShootError,
    DEFAULT_TOL_C,
};

const EXIT_USAGE: i32 = 2;
const EXIT_INCONCLUSIVE: i32 = 3;
const EXIT_BLOWUP: i32 = 4;
const EXIT_PARTIAL: i32 = 5;
const EXIT_CHECK_FAILED: i32 = 6;

#[derive(Parser)]
#[command(name = "wavespeed", version, about = "Traveling-wave speeds of the coupled FKPP-Burgers system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IcFlag {
    Both,
    TOnly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhichTable {
    Table1,
    Figure1,
    Threshold,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Traps,
    Integrals,
    Aux,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal wave speed by shooting bisection.
    MinSpeed {
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        /// Relative tolerance on the speed.
        #[arg(long)]
        tol_c: Option<f64>,
        /// Base output path; writes `<out>` (CSV), `<out>.json`, and
        /// `<out>.run.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the connecting profile at the computed speed.
        #[arg(long)]
        profile_out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip the results cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Full PDE simulation with front tracking.
    Pde {
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        /// Initial condition: both fields Heaviside, or temperature only.
        #[arg(long, value_enum)]
        ic: Option<IcFlag>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Prefactor, speed-surface, and threshold tables.
    Tables {
        #[arg(long, value_enum)]
        which: WhichTable,
        /// Comma-separated values; `a..b` and `a..b..n` ranges allowed.
        #[arg(long)]
        nu_list: Option<String>,
        #[arg(long)]
        rho_list: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        tol_c: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
    },
    /// Trapping-region, integral, and auxiliary-function checks.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Key-value config, or (for the aux suite) an auxiliary-function
        /// file directly.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional JSON report dump.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::MinSpeed { nu, rho, tol_c, out, profile_out, config, no_cache } => {
            cmd_min_speed(nu, rho, tol_c, out, profile_out, config, no_cache)
        }
        Command::Pde { nu, rho, ic, t_end, dx, out_dir, config } => {
            cmd_pde(nu, rho, ic, t_end, dx, out_dir, config)
        }
        Command::Tables { which, nu_list, rho_list, jobs, tol_c, out, config, no_cache } => {
            cmd_tables(which, nu_list, rho_list, jobs, tol_c, out, config, no_cache)
        }
        Command::Verify { suite, config, out } => cmd_verify(suite, config, out),
    };
    std::process::exit(code);
}

fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("error: {msg}");
    code
}

/// Loads the config file (if any) and resolves one f64 key with the
/// priority flag > file > default.
struct Merged {
    file: BTreeMap<String, String>,
}

impl Merged {
    fn load(config: &Option<PathBuf>) -> Result<Self, String> {
        let file = match config {
            Some(path) => parse_config_file(path).map_err(|e| e.to_string())?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw.parse().map_err(|_| format!("config key '{key}': bad value '{raw}'")),
            None => Ok(default),
        }
    }

    fn string(&self, key: &str, flag: Option<String>, default: &str) -> String {
        flag.or_else(|| self.file.get(key).cloned()).unwrap_or_else(|| default.to_string())
    }

    fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw.parse().map_err(|_| format!("config key '{key}': bad value '{raw}'")),
            None => Ok(default),
        }
    }
}

fn validate_params(nu: f64, rho: f64) -> Result<SystemParams, String> {
    if !(rho > 0.0) {
        return Err("rho must be positive".into());
    }
    if !(nu >= 0.0) {
        return Err("nu must be nonnegative".into());
    }
    SystemParams::new(nu, rho).map_err(|e| e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn cmd_min_speed(
    nu: Option<f64>,
    rho: Option<f64>,
    tol_c: Option<f64>,
    out: Option<PathBuf>,
    profile_out: Option<PathBuf>,
    config: Option<PathBuf>,
    no_cache: bool,
) -> i32 {
    let started = Instant::now();
    let merged = match Merged::load(&config) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let nu = match merged.f64("nu", nu, 0.0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let rho = match merged.f64("rho", rho, 1.0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let tol_c = match merged.f64("tol_c", tol_c, DEFAULT_TOL_C) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let p = match validate_params(nu, rho) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, &e),
    };

    let mut params = BTreeMap::new();
    params.insert("nu".to_string(), format!("{nu}"));
    params.insert("rho".to_string(), format!("{rho}"));
    params.insert("tol_c".to_string(), format!("{tol_c}"));
    let key = params_key("min-speed", &params);
    let cache = ResultCache::open_default();

    let outcome: MinSpeedOutcome = match (!no_cache)
        .then(|| cache.lookup(&key))
        .flatten()
        .and_then(|v| {
            Some(MinSpeedOutcome {
                estimate: serde_json::from_value(v.get("estimate")?.clone()).ok()?,
                stopped_inconclusive: v.get("stopped_inconclusive")?.as_bool()?,
            })
        }) {
        Some(hit) => hit,
        None => match min_speed(&p, tol_c) {
            Ok(out) => {
                if !no_cache {
                    let value = serde_json::json!({
                        "estimate": out.estimate,
                        "stopped_inconclusive": out.stopped_inconclusive,
                    });
                    let _ = cache.store(&key, &value);
                }
                out
            }
            Err(ShootError::Bracket(msg)) => {
                return fail(EXIT_USAGE, &format!("bracketing stage failed: {msg}"))
            }
            Err(e) => return fail(EXIT_USAGE, &format!("shooting stage failed: {e}")),
        },
    };

    let est = outcome.estimate;
    println!(
        "c_star={:.4} bracket=[{:.6},{:.6}] evaluations={}",
        est.value, est.bracket_lo, est.bracket_hi, est.evaluations
    );

    let mut record = RunRecord::new("min-speed", params);
    if let Some(path) = &profile_out {
        let w = match WaveParams::new(p, est.value) {
            Ok(w) => w,
            Err(e) => return fail(EXIT_USAGE, &e.to_string()),
        };
        match extract_profile(&w, &Tolerances::default()) {
            Ok(profile) => {
                let mut buf = Vec::new();
                if profile.trajectory.write_csv(&mut buf).is_err() {
                    return fail(EXIT_USAGE, "profile serialization failed");
                }
                if let Err(e) = std::fs::write(path, buf) {
                    return fail(EXIT_USAGE, &format!("writing {}: {e}", path.display()));
                }
                record.outputs.push(path.clone());
            }
            Err(e) => return fail(EXIT_INCONCLUSIVE, &format!("profile extraction failed: {e}")),
        }
    }
    if let Some(out) = &out {
        let rows = vec![SpeedRow::from_estimate(nu, rho, &est)];
        let json_path = out.with_extension("json");
        let run_path = out.with_extension("run.json");
        if let Err(e) = write_speed_csv(out, &rows) {
            return fail(EXIT_USAGE, &e.to_string());
        }
        if let Err(e) = write_speed_json(&json_path, &rows) {
            return fail(EXIT_USAGE, &e.to_string());
        }
        record.outputs.push(out.clone());
        record.outputs.push(json_path);
        record.wall_time = started.elapsed().as_secs_f64();
        if let Err(e) = record.write(&run_path) {
            return fail(EXIT_USAGE, &e.to_string());
        }
    }
    if outcome.stopped_inconclusive {
        eprintln!("warning: bisection stopped on an inconclusive midpoint; bracket is conservative");
        return EXIT_INCONCLUSIVE;
    }
    0
}

fn time_tag(t: f64) -> String {
    if (t - t.round()).abs() < 1e-9 {
        format!("{}", t.round() as i64)
    } else {
        format!("{t}")
    }
}

fn cmd_pde(
    nu: Option<f64>,
    rho: Option<f64>,
    ic: Option<IcFlag>,
    t_end: Option<f64>,
    dx: Option<f64>,
    out_dir: Option<PathBuf>,
    config: Option<PathBuf>,
) -> i32 {
    let started = Instant::now();
    let merged = match Merged::load(&config) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let nu = match merged.f64("nu", nu, 1.0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let rho = match merged.f64("rho", rho, 1.0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let ic_name = merged.string(
        "ic",
        ic.map(|f| match f {
            IcFlag::Both => "both".to_string(),
            IcFlag::TOnly => "t-only".to_string(),
        }),
        "both",
    );
    let ic_kind = match ic_name.as_str() {
        "both" => IcKind::HeavisideBoth,
        "t-only" => IcKind::HeavisideTOnly,
        other => return fail(EXIT_USAGE, &format!("unknown ic '{other}'")),
    };
    let t_end = match merged.f64("t_end", t_end, 50.0) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let dx = match merged.f64("dx", dx, 0.05) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let p = match validate_params(nu, rho) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let out_dir = out_dir
        .or_else(|| merged.file.get("out_dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pde_out"));

    let cfg = SimConfig {
        dx,
        t_end,
        ic_kind,
        snapshot_times: SimConfig::default()
            .snapshot_times
            .into_iter()
            .filter(|&s| s <= t_end)
            .collect(),
        ..Default::default()
    };
    if let Err(e) = cfg.validate() {
        return fail(EXIT_USAGE, &e.to_string());
    }

    let sim = match simulate(&p, &cfg) {
        Ok(s) => s,
        Err(PdeError::BlowUp { t, magnitude }) => {
            return fail(EXIT_BLOWUP, &format!("solution blew up at t = {t:.4} (|field| = {magnitude:.3e})"))
        }
        Err(e) => return fail(EXIT_USAGE, &e.to_string()),
    };
    let est = match estimate_speed(&sim.track, 0.4) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_USAGE, &e.to_string()),
    };
    let plateau = sim.track.final_plateau().unwrap_or(f64::NAN);
    println!(
        "speed={:.4} bracket=[{:.6},{:.6}] plateau={:.4} steps={}",
        est.value, est.bracket_lo, est.bracket_hi, plateau, sim.steps
    );

    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return fail(EXIT_USAGE, &format!("creating {}: {e}", out_dir.display()));
    }
    let mut params = BTreeMap::new();
    params.insert("nu".to_string(), format!("{nu}"));
    params.insert("rho".to_string(), format!("{rho}"));
    params.insert("ic".to_string(), ic_name);
    params.insert("t_end".to_string(), format!("{t_end}"));
    params.insert("dx".to_string(), format!("{dx}"));
    params.insert("cfl".to_string(), format!("{}", cfg.cfl));
    params.insert("x_min".to_string(), format!("{}", cfg.x_min));
    params.insert("x_max".to_string(), format!("{}", cfg.x_max));
    params.insert("ic_location".to_string(), format!("{}", cfg.ic_location));
    let mut record = RunRecord::new("pde", params);
    for snap in &sim.snapshots {
        let path = out_dir.join(format!("snapshot_t{}.csv", time_tag(snap.time)));
        if let Err(e) = write_snapshot_csv(&path, &sim.grid, snap) {
            return fail(EXIT_USAGE, &e.to_string());
        }
        record.outputs.push(path);
    }
    let front_path = out_dir.join("front.csv");
    if let Err(e) = write_front_csv(&front_path, &sim.track) {
        return fail(EXIT_USAGE, &e.to_string());
    }
    record.outputs.push(front_path);
    record.wall_time = started.elapsed().as_secs_f64();
    if let Err(e) = record.write(&out_dir.join("run.json")) {
        return fail(EXIT_USAGE, &e.to_string());
    }
    0
}

#[allow(clippy::too_many_arguments)]
fn cmd_tables(
    which: WhichTable,
    nu_list: Option<String>,
    rho_list: Option<String>,
    jobs: Option<usize>,
    tol_c: Option<f64>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    no_cache: bool,
) -> i32 {
    let started = Instant::now();
    let merged = match Merged::load(&config) {
        Ok(m) => m,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let nu_text = merged.string("nu_list", nu_list, "0");
    let rho_text = merged.string("rho_list", rho_list, "1");
    let jobs = match merged.usize("jobs", jobs, 1) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let tol_c = match merged.f64("tol_c", tol_c, DEFAULT_TOL_C) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    let nus = match parse_value_list(&nu_text) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &format!("--nu-list: {e}")),
    };
    let rhos = match parse_value_list(&rho_text) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &format!("--rho-list: {e}")),
    };

    let which_name = match which {
        WhichTable::Table1 => "table1",
        WhichTable::Figure1 => "figure1",
        WhichTable::Threshold => "threshold",
    };
    let out = out
        .or_else(|| merged.file.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{which_name}.csv")));

    let tol_rho = match merged.f64("tol_rho", None, 0.02) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, &e),
    };
    // The cache key excludes the worker count, which never changes results.
    let mut cache_params = BTreeMap::new();
    cache_params.insert("which".to_string(), which_name.to_string());
    cache_params.insert("nu_list".to_string(), nu_text.clone());
    cache_params.insert("rho_list".to_string(), rho_text.clone());
    cache_params.insert("tol_c".to_string(), format!("{tol_c}"));
    if matches!(which, WhichTable::Threshold) {
        cache_params.insert("tol_rho".to_string(), format!("{tol_rho}"));
    }
    let cache = ResultCache::open_default();
    let cache_key = params_key("tables", &cache_params);
    let cached: Option<serde_json::Value> =
        if no_cache { None } else { cache.lookup(&cache_key) };
    let mut params = cache_params.clone();
    params.insert("jobs".to_string(), format!("{jobs}"));
    let mut record = RunRecord::new("tables", params);

    let (total, failed) = match which {
        WhichTable::Table1 => {
            let mut all_rows: Vec<wavespeed::shooting::PrefactorRow> = Vec::new();
            let mut failures = 0usize;
            let mut total = 0usize;
            if let Some(rows) = cached.and_then(|v| serde_json::from_value(v).ok()) {
                all_rows = rows;
                total = all_rows.len();
                failures = all_rows.iter().filter(|r| r.error.is_some()).count();
            } else {
                for &nu in &nus {
                    let p = match validate_params(nu, rhos[0]) {
                        Ok(p) => p,
                        Err(e) => return fail(EXIT_USAGE, &e),
                    };
                    let rows = prefactor_scan(&p, &rhos, tol_c, jobs);
                    for row in &rows {
                        total += 1;
                        if let Some(err) = &row.error {
                            failures += 1;
                            eprintln!("row nu={} rho={} failed: {err}", row.nu, row.rho);
                        }
                    }
                    all_rows.extend(rows);
                }
                if !no_cache {
                    if let Ok(v) = serde_json::to_value(&all_rows) {
                        let _ = cache.store(&cache_key, &v);
                    }
                }
            }
            let ok_rows: Vec<SpeedRow> =
                all_rows.iter().filter_map(SpeedRow::from_prefactor_row).collect();
            if let Err(e) = write_speed_csv(&out, &ok_rows) {
                return fail(EXIT_USAGE, &e.to_string());
            }
            let json_path = out.with_extension("json");
            if let Err(e) =
                std::fs::write(&json_path, serde_json::to_string_pretty(&all_rows).unwrap() + "\n")
            {
                return fail(EXIT_USAGE, &format!("writing {}: {e}", json_path.display()));
            }
            record.outputs.push(out.clone());
            record.outputs.push(json_path);
            for row in &all_rows {
                if let Some(pf) = row.prefactor {
                    println!("nu={} rho={:.6e} c_star={:.6} prefactor={:.4}",
                        row.nu, row.rho, row.c_star.unwrap(), pf);
                }
            }
            (total, failures)
        }
        WhichTable::Figure1 => {
            let table = match cached.and_then(|v| serde_json::from_value(v).ok()) {
                Some(table) => table,
                None => {
                    let table = figure1_sweep(&nus, &rhos, tol_c, jobs);
                    if !no_cache {
                        if let Ok(v) = serde_json::to_value(&table) {
                            let _ = cache.store(&cache_key, &v);
                        }
                    }
                    table
                }
            };
            let failures = table.cells.iter().filter(|c| c.error.is_some()).count();
            for finding in &table.findings {
                println!("finding: {finding}");
            }
            if table.findings.is_empty() {
                println!("monotone within tolerance along both axes");
            }
            if let Err(e) = write_sweep_csv(&out, &table) {
                return fail(EXIT_USAGE, &e.to_string());
            }
            record.outputs.push(out.clone());
            (table.cells.len(), failures)
        }
        WhichTable::Threshold => {
            let mut rows: Vec<wavespeed::shooting::ThresholdEstimate> = Vec::new();
            let mut failures = 0usize;
            if let Some(cached_rows) = cached.and_then(|v| serde_json::from_value(v).ok()) {
                rows = cached_rows;
                for est in &rows {
                    println!(
                        "nu={} rho_hat={:.4} bracket=[{:.4},{:.4}]",
                        est.nu, est.rho_hat, est.bracket_lo, est.bracket_hi
                    );
                }
            } else {
                for &nu in &nus {
                    match threshold_rho(nu, tol_rho, tol_c) {
                        Ok(est) => {
                            println!(
                                "nu={} rho_hat={:.4} bracket=[{:.4},{:.4}]",
                                nu, est.rho_hat, est.bracket_lo, est.bracket_hi
                            );
                            rows.push(est);
                        }
                        Err(e) => {
                            failures += 1;
                            eprintln!("threshold at nu={nu} failed: {e}");
                        }
                    }
                }
                if !no_cache && failures == 0 {
                    if let Ok(v) = serde_json::to_value(&rows) {
                        let _ = cache.store(&cache_key, &v);
                    }
                }
            }
            if let Err(e) = write_threshold_csv(&out, &rows) {
                return fail(EXIT_USAGE, &e.to_string());
            }
            record.outputs.push(out.clone());
            (nus.len(), failures)
        }
    };

    record.wall_time = started.elapsed().as_secs_f64();
    if let Err(e) = record.write(&out.with_extension("run.json")) {
        return fail(EXIT_USAGE, &e.to_string());
    }
    if total > 0 && (total - failed) * 10 < total * 9 {
        eprintln!("error: {failed}/{total} rows failed");
        return EXIT_PARTIAL;
    }
    0
}

fn cmd_verify(suite: Suite, config: Option<PathBuf>, out: Option<PathBuf>) -> i32 {
    let started = Instant::now();
    let mut reports: Vec<(String, BoundReport)> = Vec::new();
    let mut hard_error: Option<String> = None;
    let curve = SampleSpec::curve_default();
    let face = SampleSpec::face_default();

    let wave = |nu: f64, rho: f64, c: f64| {
        WaveParams::new(SystemParams::new(nu, rho).expect("valid params"), c).expect("valid wave")
    };

    if matches!(suite, Suite::Traps | Suite::All) {
        let named: Vec<(String, Result<BoundReport, _>)> = vec![
            ("inviscid_trap(c=20, rho=1)".into(), check_inviscid_trap(20.0, 1.0, &curve)),
            ("small_rho_trap(rho=0.5)".into(), check_small_rho_trap(0.5, &curve)),
            ("small_rho_trap(rho=1.0)".into(), check_small_rho_trap(1.0, &curve)),
            ("large_rho_trap(sigma=1.8, rho=1e6)".into(), check_large_rho_trap(1.8, 1e6, &curve)),
            (
                "viscous_trap_r1(nu=1, rho=1, c=20)".into(),
                check_viscous_traps(TrapRegion::R1, &wave(1.0, 1.0, 20.0), &face),
            ),
            (
                "viscous_trap_r2(nu=0.5, rho=0.01, c=2)".into(),
                check_viscous_traps(TrapRegion::R2, &wave(0.5, 0.01, 2.0), &face),
            ),
            (
                "viscous_trap_r3(nu=1, rho=1e6, c=2100)".into(),
                check_viscous_traps(TrapRegion::R3, &wave(1.0, 1e6, 2.1e3), &face),
            ),
        ];
        for (name, rep) in named {
            match rep {
                Ok(rep) => reports.push((name, rep)),
                Err(e) => hard_error = Some(format!("{name}: {e}")),
            }
        }
    }

    if matches!(suite, Suite::Integrals | Suite::All) {
        match extract_profile(&wave(0.0, 1.0, 2.0), &Tolerances::default()) {
            Ok(profile) => match wave_integral_diagnostics(&profile) {
                Ok(reps) => {
                    for rep in reps {
                        reports.push((format!("{}(nu=0, rho=1, c=2)", rep.name), rep));
                    }
                }
                Err(e) => hard_error = Some(format!("integral diagnostics: {e}")),
            },
            Err(e) => hard_error = Some(format!("profile extraction: {e}")),
        }
    }

    if matches!(suite, Suite::Aux | Suite::All) {
        let w = wave(0.0, 1.0, 2.05);
        let spec = SampleSpec { points_per_axis: 512, ..SampleSpec::face_default() };
        let checks: Vec<(String, AuxFunction, AuxTemplate, WaveParams)> = match &config {
            Some(path) => match load_aux_config(path) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_USAGE, &e),
            },
            None => vec![(
                "fitted_inv_upper".into(),
                wavespeed::bounds::aux::example_inv_upper(),
                AuxTemplate::InvUpper,
                w,
            )],
        };
        for (name, h, template, wp) in checks {
            match check_aux_conditions(template, &h, &wp, &spec) {
                Ok(aux_rep) => {
                    let label = format!("{name} [{}]", aux_rep.binding_condition);
                    reports.push((label, aux_rep.report));
                }
                Err(e) => hard_error = Some(format!("{name}: {e}")),
            }
        }
    }

    let mut all_hold = true;
    for (name, rep) in &reports {
        let status = if rep.holds { "PASS" } else { "FAIL" };
        println!("{status} {name}: margin = {:+.6e}", rep.margin);
        all_hold &= rep.holds;
    }
    if let Some(path) = &out {
        let bare: Vec<BoundReport> = reports.iter().map(|(_, r)| r.clone()).collect();
        if let Err(e) = write_reports_json(path, &bare) {
            return fail(EXIT_USAGE, &e.to_string());
        }
        let mut params = BTreeMap::new();
        params.insert(
            "suite".to_string(),
            match suite {
                Suite::Traps => "traps",
                Suite::Integrals => "integrals",
                Suite::Aux => "aux",
                Suite::All => "all",
            }
            .to_string(),
        );
        if let Some(cfg) = &config {
            params.insert("config".to_string(), cfg.display().to_string());
        }
        let mut record = RunRecord::new("verify", params);
        record.outputs.push(path.clone());
        record.wall_time = started.elapsed().as_secs_f64();
        if let Err(e) = record.write(&path.with_extension("run.json")) {
            return fail(EXIT_USAGE, &e.to_string());
        }
    }
    if let Some(msg) = hard_error {
        return fail(EXIT_USAGE, &msg);
    }
    if !all_hold {
        return EXIT_CHECK_FAILED;
    }
    0
}

/// The aux suite accepts either a key-value config naming an `aux_file`, or
/// an auxiliary-function file directly.
fn load_aux_config(
    path: &Path,
) -> Result<Vec<(String, AuxFunction, AuxTemplate, WaveParams)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "aux".to_string());
    let looks_like_config = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .any(|l| l.contains('='));
    let (h_text, map) = if looks_like_config {
        let map = wavespeed::cli::parse_config_text(&text).map_err(|e| e.to_string())?;
        let aux_path = map.get("aux_file").ok_or("config must set aux_file")?;
        let base = path.parent().unwrap_or(Path::new("."));
        let h_text = std::fs::read_to_string(base.join(aux_path))
            .map_err(|e| format!("{aux_path}: {e}"))?;
        (h_text, map)
    } else {
        (text, BTreeMap::new())
    };
    let h = AuxFunction::parse(&h_text).map_err(|e| e.to_string())?;
    let template = match map.get("template").map(String::as_str) {
        None => {
            if h.variables == 2 {
                AuxTemplate::InvUpper
            } else {
                AuxTemplate::VisUpper
            }
        }
        Some("inv_upper") => AuxTemplate::InvUpper,
        Some("inv_lower") => AuxTemplate::InvLower,
        Some("vis_upper") => AuxTemplate::VisUpper,
        Some("vis_lower") => AuxTemplate::VisLower,
        Some(other) => return Err(format!("unknown template '{other}'")),
    };
    let get = |key: &str, default: f64| -> Result<f64, String> {
        match map.get(key) {
            Some(raw) => raw.parse().map_err(|_| format!("bad {key} '{raw}'")),
            None => Ok(default),
        }
    };
    let nu = get("nu", if template.dimension() == 3 { 1.0 } else { 0.0 })?;
    let rho = get("rho", 1.0)?;
    let c = get("c", 2.05)?;
    let p = SystemParams::new(nu, rho).map_err(|e| e.to_string())?;
    let w = WaveParams::new(p, c).map_err(|e| e.to_string())?;
    Ok(vec![(stem, h, template, w)])
}
