//! Acceptance run: the full suite twice at seed 7, then one line per criterion.
//! Exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_affine-trace");

/// Best Poisson quotient / D over the seed-7 search runs.
const POISSON_BASELINE: f64 = 0.7206505459845045;

struct Criterion {
    id: &'static str,
    title: &'static str,
    checks: &'static [&'static str],
    limit_secs: f64,
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: "C1", title: "constant identities", checks: &["constants"], limit_secs: 1.0 },
    Criterion { id: "C2", title: "Poisson machinery", checks: &["poisson-multiplier", "time-weight"], limit_secs: 30.0 },
    Criterion { id: "C3", title: "norm identity", checks: &["norm-identity"], limit_secs: 120.0 },
    Criterion { id: "C4", title: "weighted Sobolev equality case", checks: &["haddad-extremal"], limit_secs: 300.0 },
    Criterion { id: "C5", title: "Poisson trace strictness", checks: &["poisson-corpus", "poisson-search"], limit_secs: 900.0 },
    Criterion {
        id: "C6",
        title: "non-Poisson sharpness",
        checks: &["nonpoisson-identity", "nonpoisson-extremal", "q-scaling"],
        limit_secs: 600.0,
    },
    Criterion {
        id: "C7",
        title: "duality suite",
        checks: &["duality", "hls-extremal", "fracsob-extremal"],
        limit_secs: 600.0,
    },
    Criterion {
        id: "C8",
        title: "affine properties",
        checks: &["affine-invariance", "energy-vs-gradient", "amgm"],
        limit_secs: 300.0,
    },
];

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("affine-trace-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_suite(out: &Path) -> bool {
    let run = Command::new(BIN)
        .args(["suite", "--seed", "7", "--out"])
        .arg(out)
        .output()
        .expect("failed to launch the suite");
    if !run.status.success() {
        eprint!("{}", String::from_utf8_lossy(&run.stderr));
    }
    run.status.success()
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check<'a>(report: &'a Value, name: &str) -> Option<&'a Value> {
    report["checks"].as_array()?.iter().find(|c| c["name"] == name)
}

fn failed_metrics(c: &Value) -> Vec<String> {
    let mut out: Vec<String> = c["metrics"]
        .as_array()
        .into_iter()
        .flatten()
        .filter(|m| m["passed"] != true)
        .map(|m| format!("{} = {} ({})", m["label"].as_str().unwrap_or("?"), m["value"], m["bound"].as_str().unwrap_or("")))
        .collect();
    out.extend(c["notes"].as_array().into_iter().flatten().filter_map(|n| n.as_str()).filter(|n| n.starts_with("error")).map(String::from));
    out
}

fn metric(report: &Value, name: &str, label_prefix: &str) -> f64 {
    check(report, name)
        .and_then(|c| c["metrics"].as_array()?.iter().find(|m| m["label"].as_str().is_some_and(|l| l.starts_with(label_prefix))))
        .and_then(|m| m["value"].as_f64())
        .unwrap_or(f64::NAN)
}

/// Runs `verify` at α = 3/4 for the checks whose criterion covers both desk values.
fn verify_three_quarters(name: &str) -> bool {
    Command::new(BIN)
        .args(["verify", name, "--alpha", "0.75"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn main() {
    let (dir_a, dir_b) = (scratch_dir("a"), scratch_dir("b"));
    let ran_a = run_suite(&dir_a);
    let ran_b = run_suite(&dir_b);
    let report = read_json(&dir_a.join("report.json"));
    let meta = read_json(&dir_a.join("metadata.json"));
    let seconds = |name: &str| -> f64 {
        meta["check_seconds"]
            .as_array()
            .into_iter()
            .flatten()
            .find(|e| e[0] == name)
            .and_then(|e| e[1].as_f64())
            .unwrap_or(f64::INFINITY)
    };

    let mut all = true;
    for cr in &CRITERIA {
        let mut problems = Vec::new();
        let mut secs = 0.0;
        for name in cr.checks {
            secs += seconds(name);
            match check(&report, name) {
                Some(c) if c["passed"] == true => {}
                Some(c) => problems.extend(failed_metrics(c).into_iter().map(|p| format!("{name}: {p}"))),
                None => problems.push(format!("{name}: missing from report")),
            }
        }
        if secs >= cr.limit_secs {
            problems.push(format!("runtime {secs:.1}s over {}s", cr.limit_secs));
        }
        let detail = match cr.id {
            "C1" => {
                let c = check(&report, "constants");
                let note = c.and_then(|c| c["notes"][0].as_str()).unwrap_or("");
                format!("identities exact to 1e-12; {note}")
            }
            "C2" => format!(
                "mass {:.1e}, multiplier {:.1e}, time weight {:.1e}",
                metric(&report, "poisson-multiplier", "unit mass"),
                metric(&report, "poisson-multiplier", "grid transform"),
                metric(&report, "time-weight", "a = 0,")
            ),
            "C3" => format!(
                "gaussian identity error {:.2e}, refinement ratios {:.2} and {:.2}",
                metric(&report, "norm-identity", "gaussian: identity"),
                metric(&report, "norm-identity", "gaussian: error ratio 64"),
                metric(&report, "norm-identity", "gaussian: error ratio 128")
            ),
            "C4" => format!(
                "quotient/J = {:.6}, refinement ladder monotone",
                metric(&report, "haddad-extremal", "quotient / J")
            ),
            "C5" => {
                let searches = check(&report, "poisson-search").and_then(|c| c["searches"].as_array().cloned()).unwrap_or_default();
                let best = searches
                    .iter()
                    .filter_map(|s| Some(s["refined"]["quotient"].as_f64()? / s["refined"]["reference"].as_f64()?))
                    .fold(f64::NEG_INFINITY, f64::max);
                for s in &searches {
                    let trace = s["trace"].as_array().map_or(0, |t| t.len());
                    let restarts = s["trace"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(|e| e["restart"].as_u64())
                        .max()
                        .map_or(0, |r| r + 1);
                    if trace > 300 || restarts != 5 {
                        problems.push(format!("{}: {trace} evaluations over {restarts} restarts", s["family_kind"]));
                    }
                }
                if (best - POISSON_BASELINE).abs() > 1e-6 * POISSON_BASELINE {
                    problems.push(format!("best quotient/D {best} moved from baseline {POISSON_BASELINE}"));
                }
                format!("best quotient/D = {best:.6} (baseline {POISSON_BASELINE:.6}), all margins positive")
            }
            "C6" => format!(
                "identity {:.1e}, quotient/J at h_star = {:.6}, scaling reduction {:.1e}",
                metric(&report, "nonpoisson-identity", "h_star: spectral norm vs slice"),
                metric(&report, "nonpoisson-extremal", "quotient / J"),
                metric(&report, "q-scaling", "scaling reduction")
            ),
            "C7" => {
                for name in cr.checks {
                    if !verify_three_quarters(name) {
                        problems.push(format!("{name} fails at alpha = 3/4"));
                    }
                }
                format!(
                    "Plancherel {:.1e}, brute force {:.1e}, HLS {:.6}, fractional Sobolev {:.6}; alpha = 3/4 rerun",
                    metric(&report, "duality", "Plancherel"),
                    metric(&report, "duality", "gaussian: double integral"),
                    metric(&report, "hls-extremal", "extremal quotient"),
                    metric(&report, "fracsob-extremal", "extremal quotient")
                )
            }
            _ => format!(
                "homogeneity {:.1e}, SL(2) {:.1e}",
                metric(&report, "affine-invariance", "E_p(cF)"),
                metric(&report, "affine-invariance", "SL map shear")
            ),
        };
        let ok = problems.is_empty();
        all &= ok;
        println!("{} {} {}: {detail} [{secs:.1}s]", cr.id, if ok { "PASS" } else { "FAIL" }, cr.title);
        for p in problems {
            println!("     {p}");
        }
    }

    let a = std::fs::read(dir_a.join("report.json")).unwrap_or_default();
    let b = std::fs::read(dir_b.join("report.json")).unwrap_or_default();
    let same = ran_b && !a.is_empty() && a == b;
    all &= same;
    println!(
        "C9 {} determinism: suite --seed 7 twice gives {} report.json ({} bytes)",
        if same { "PASS" } else { "FAIL" },
        if same { "byte-identical" } else { "different" },
        a.len()
    );

    let extras: Vec<&str> = ["q-weight-substitution", "sharpness"]
        .into_iter()
        .filter(|n| check(&report, n).is_none_or(|c| c["passed"] != true))
        .collect();
    println!(
        "   supporting checks (q-weight-substitution, sharpness): {}",
        if extras.is_empty() { "passed".to_string() } else { format!("failed: {}", extras.join(", ")) }
    );
    if let Ok(t) = affine_trace::constants::constant_table(3, 0.5) {
        println!(
            "   informational: extremal quotient / printed L*M = {:.4}; best Poisson quotient / printed D = {:.4}",
            t.j / t.lm_printed,
            POISSON_BASELINE * t.d / t.d_printed
        );
    }
    if !ran_a {
        println!("   suite exit status was non-zero");
    }

    let _ = std::fs::remove_dir_all(&dir_a);
    let _ = std::fs::remove_dir_all(&dir_b);
    if !all {
        std::process::exit(1);
    }
}
