use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_affine-trace");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn constants_json_reports_the_ratio() {
    let (code, out, _) = run(&["constants", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["D_over_J"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["n"], 3);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["verify", "no-such-check"]).0, 2);
    assert_eq!(run(&["constants", "--grid", "63"]).0, 2);
    assert_eq!(run(&["quotient", "poisson", "--params", "1,2"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = std::env::temp_dir().join(format!("affine-trace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "# quick\nalpha = 0.75\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = run(&["--config", cfg, "constants", "--json"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"alpha\": 0.75"));
    let (_, out, _) = run(&["--config", cfg, "constants", "--json", "--alpha", "0.5"]);
    assert!(out.contains("\"alpha\": 0.5"));
    std::fs::write(dir.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(run(&["--config", dir.join("bad.conf").to_str().unwrap(), "constants"]).0, 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_prints_one_line_per_metric() {
    let (code, out, _) = run(&["verify", "time-weight"]);
    assert_eq!(code, 0);
    assert!(out.lines().filter(|l| l.starts_with("ok")).count() >= 2);
    assert!(out.contains("time-weight: passed"));
}

#[test]
fn quotient_prints_a_report() {
    let (code, out, _) = run(&["quotient", "poisson", "--family", "gaussian", "--grid", "32", "--tnodes", "24"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["margin"].as_f64().unwrap() > 0.0);
}
