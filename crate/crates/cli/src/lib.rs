//! Verification checks and the suite runner behind the `affine-trace` binary.

pub mod checks;
pub mod settings;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use affine_trace::inequalities::CSV_HEADER;
use affine_trace::{Error, Result};
use serde::Serialize;

use checks::{run_check, CheckOutcome, CHECK_NAMES, SUITE_EXTRAS};
use settings::Settings;

/// Everything the suite computes. Serialized to `report.json`, which is a
/// pure function of the settings.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub settings: Settings,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Wall-clock data, kept out of the report so reruns compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteMetadata {
    pub version: &'static str,
    pub started_unix: u64,
    pub total_seconds: f64,
    pub check_seconds: Vec<(String, f64)>,
}

pub fn suite_names() -> Vec<&'static str> {
    SUITE_EXTRAS[..1].iter().chain(CHECK_NAMES.iter()).chain(&SUITE_EXTRAS[1..]).copied().collect()
}

/// A check that errors is recorded as failed with the error in its notes.
fn run_recorded(name: &str, cfg: &Settings) -> CheckOutcome {
    run_check(name, cfg).unwrap_or_else(|e| CheckOutcome {
        name: name.into(),
        passed: false,
        metrics: Vec::new(),
        reports: Vec::new(),
        searches: Vec::new(),
        sharpness: None,
        notes: vec![format!("error: {e}")],
    })
}

/// Runs every check on `cfg.jobs` threads. Results come back in name order.
pub fn run_suite(cfg: &Settings, mut progress: impl FnMut(&CheckOutcome, f64) + Send) -> Result<(SuiteReport, SuiteMetadata)> {
    cfg.validate()?;
    let names = suite_names();
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let next = AtomicUsize::new(0);
    let done = Mutex::new(Vec::new());
    let progress = Mutex::new(&mut progress);
    std::thread::scope(|s| {
        for _ in 0..cfg.jobs.min(names.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(name) = names.get(i) else { break };
                let t = Instant::now();
                let out = run_recorded(name, cfg);
                let secs = t.elapsed().as_secs_f64();
                (progress.lock().unwrap_or_else(|e| e.into_inner()))(&out, secs);
                done.lock().unwrap_or_else(|e| e.into_inner()).push((out, secs));
            });
        }
    });
    let mut done = done.into_inner().unwrap_or_else(|e| e.into_inner());
    done.sort_by(|a, b| a.0.name.cmp(&b.0.name));
    let check_seconds = done.iter().map(|(o, s)| (o.name.clone(), *s)).collect();
    let checks: Vec<CheckOutcome> = done.into_iter().map(|(o, _)| o).collect();
    let report = SuiteReport { schema: 1, settings: *cfg, passed: checks.iter().all(|c| c.passed), checks };
    let meta = SuiteMetadata {
        version: env!("CARGO_PKG_VERSION"),
        started_unix,
        total_seconds: clock.elapsed().as_secs_f64(),
        check_seconds,
    };
    Ok((report, meta))
}

/// Writes `report.json`, `metadata.json` and `summary.csv` into `dir`.
pub fn write_suite(dir: &Path, report: &SuiteReport, meta: &SuiteMetadata) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("report.json"), to_json(report)?).map_err(io)?;
    std::fs::write(dir.join("metadata.json"), to_json(meta)?).map_err(io)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for c in &report.checks {
        for r in &c.reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
    }
    std::fs::write(dir.join("summary.csv"), csv).map_err(io)
}

pub fn to_json<V: Serialize>(v: &V) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}
