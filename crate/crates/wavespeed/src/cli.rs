//! Configuration, result persistence, and plot-data emission shared by the
//! command-line surface.
//!
//! Flat `key = value` config files, a JSON-lines results cache keyed by a
//! content hash of the effective parameter map, run records that make every
//! output reproducible, and CSV writers with 17-significant-digit floats.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bounds::{BoundReport, SweepTable};
use crate::pde::{FieldSnapshot, FrontTrack};
use crate::shooting::{PrefactorRow, SpeedEstimate};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// 17-significant-digit float formatting; round-trips `f64` exactly.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a flat config file: one `key = value` per line, `#` comments.
pub fn parse_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Parses a comma-separated list of values with optional `a..b` or
/// `a..b..n` range items (`n` evenly spaced points, default 16).
pub fn parse_value_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        if let Some((a, rest)) = item.split_once("..") {
            let (b, n) = match rest.split_once("..") {
                Some((b, n)) => {
                    (b, n.parse::<usize>().map_err(|_| format!("bad range count in '{item}'"))?)
                }
                None => (rest, 16),
            };
            let a: f64 = a.trim().parse().map_err(|_| format!("bad range start in '{item}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad range end in '{item}'"))?;
            if n < 2 {
                return Err(format!("range '{item}' needs at least 2 points"));
            }
            for i in 0..n {
                out.push(a + (b - a) * i as f64 / (n - 1) as f64);
            }
        } else {
            out.push(item.parse().map_err(|_| format!("bad value '{item}'"))?);
        }
    }
    if out.is_empty() {
        return Err("empty value list".into());
    }
    Ok(out)
}

/// Record of one command invocation: the complete effective parameter map
/// (no defaults omitted), the build identifier, and every output written.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub git_describe: String,
    pub outputs: Vec<PathBuf>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn new(command: &str, params: BTreeMap<String, String>) -> Self {
        Self {
            command: command.to_string(),
            params,
            git_describe: env!("WAVESPEED_BUILD_ID").to_string(),
            outputs: Vec::new(),
            wall_time: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(io_err(path))
    }
}

/// Content hash of an effective parameter map.
pub fn params_key(command: &str, params: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    for (k, v) in params {
        hasher.update([0u8]);
        hasher.update(k.as_bytes());
        hasher.update([1u8]);
        hasher.update(v.as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON-lines results cache keyed by parameter-map hash.
pub struct ResultCache {
    path: PathBuf,
}

impl ResultCache {
    /// Cache location: `WAVESPEED_CACHE_DIR` when set, else `.wavespeed_cache`
    /// under the current directory.
    pub fn open_default() -> Self {
        let dir = std::env::var_os("WAVESPEED_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".wavespeed_cache"));
        Self { path: dir.join("results.jsonl") }
    }

    pub fn at(dir: &Path) -> Self {
        Self { path: dir.join("results.jsonl") }
    }

    pub fn lookup(&self, key: &str) -> Option<serde_json::Value> {
        let file = fs::File::open(&self.path).ok()?;
        let mut found = None;
        for line in BufReader::new(file).lines().map_while(Result::ok) {
            if let Ok(entry) = serde_json::from_str::<serde_json::Value>(&line) {
                if entry.get("key").and_then(|k| k.as_str()) == Some(key) {
                    found = entry.get("value").cloned();
                }
            }
        }
        found
    }

    pub fn store(&self, key: &str, value: &serde_json::Value) -> CliResult<()> {
        if let Some(parent) = self.path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(io_err(&self.path))?;
        let line = serde_json::to_string(&serde_json::json!({ "key": key, "value": value }))?;
        writeln!(file, "{line}").map_err(io_err(&self.path))
    }
}

/// Applies `f` to every item on a pool of `jobs` workers; results come back
/// in input order regardless of scheduling.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = (0..items.len()).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("result slot poisoned") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot poisoned").expect("worker filled every slot"))
        .collect()
}

/// Writes speed rows `nu,rho,c_star,bracket_lo,bracket_hi,prefactor,evaluations`.
pub fn write_speed_csv(path: &Path, rows: &[SpeedRow]) -> CliResult<()> {
    let mut out = String::from("nu,rho,c_star,bracket_lo,bracket_hi,prefactor,evaluations\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_full(r.nu),
            fmt_full(r.rho),
            fmt_full(r.c_star),
            fmt_full(r.bracket_lo),
            fmt_full(r.bracket_hi),
            fmt_full(r.prefactor),
            r.evaluations
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Row of the shooting interface, shared by CSV and JSON emitters.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedRow {
    pub nu: f64,
    pub rho: f64,
    pub c_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub prefactor: f64,
    pub evaluations: u64,
}

impl SpeedRow {
    pub fn from_estimate(nu: f64, rho: f64, est: &SpeedEstimate) -> Self {
        Self {
            nu,
            rho,
            c_star: est.value,
            bracket_lo: est.bracket_lo,
            bracket_hi: est.bracket_hi,
            prefactor: est.value / rho.cbrt(),
            evaluations: est.evaluations,
        }
    }

    pub fn from_prefactor_row(row: &PrefactorRow) -> Option<Self> {
        Some(Self {
            nu: row.nu,
            rho: row.rho,
            c_star: row.c_star?,
            bracket_lo: row.bracket_lo?,
            bracket_hi: row.bracket_hi?,
            prefactor: row.prefactor?,
            evaluations: row.evaluations,
        })
    }
}

pub fn write_speed_json(path: &Path, rows: &[SpeedRow]) -> CliResult<()> {
    let json = serde_json::to_string_pretty(rows)?;
    fs::write(path, json + "\n").map_err(io_err(path))
}

/// Snapshot CSV `x,T,u`, one file per requested time.
pub fn write_snapshot_csv(path: &Path, grid: &[f64], snap: &FieldSnapshot) -> CliResult<()> {
    let mut out = String::from("x,T,u\n");
    for ((x, t), u) in grid.iter().zip(&snap.t).zip(&snap.u) {
        out.push_str(&format!("{},{},{}\n", fmt_full(*x), fmt_full(*t), fmt_full(*u)));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Front-track CSV `t,x_front,plateau`.
pub fn write_front_csv(path: &Path, track: &FrontTrack) -> CliResult<()> {
    let mut out = String::from("t,x_front,plateau\n");
    for i in 0..track.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_full(track.times[i]),
            fmt_full(track.positions[i]),
            fmt_full(track.plateau[i])
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Sweep summary CSV `nu,rho,speed`; failed cells carry `nan` and the error
/// goes to the side channel column.
pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> CliResult<()> {
    let mut out = String::from("nu,rho,speed\n");
    for cell in &table.cells {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_full(cell.nu),
            fmt_full(cell.rho),
            fmt_full(cell.speed.unwrap_or(f64::NAN))
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Threshold rows `nu,rho_hat,bracket_lo,bracket_hi,evaluations`.
pub fn write_threshold_csv(
    path: &Path,
    rows: &[crate::shooting::ThresholdEstimate],
) -> CliResult<()> {
    let mut out = String::from("nu,rho_hat,bracket_lo,bracket_hi,evaluations\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_full(r.nu),
            fmt_full(r.rho_hat),
            fmt_full(r.bracket_lo),
            fmt_full(r.bracket_hi),
            r.evaluations
        ));
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_reports_json(path: &Path, reports: &[BoundReport]) -> CliResult<()> {
    let json = serde_json::to_string_pretty(reports)?;
    fs::write(path, json + "\n").map_err(io_err(path))
}
