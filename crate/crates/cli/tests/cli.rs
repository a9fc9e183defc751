use std::path::Path;
use std::process::{Command, Output};

fn heavytail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavytail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"
method = "nsgdm"
T_grid = [32, 64, 128]
seeds = 4
base_seed = 2

[problem]
name = "quadratic"
dim = 3

[oracle]
kind = "symmetric-pareto"
shape = 1.7
p = 1.5

[schedule]
kind = "known_p"
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn schedule_unknown_p_values() {
    let o = heavytail(&["schedule", "--kind", "unknown-p", "--T", "16", "--l1", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "beta = 0.75\neta = 0.125\nB = 1\n");
}

#[test]
fn schedule_known_p_values() {
    let o = heavytail(&[
        "schedule", "--T", "100", "--delta1", "1", "--l0", "1", "--sigma0", "1", "--p", "2",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["beta"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!((v["eta"].as_f64().unwrap() - 0.1 / 10f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["batch"].as_u64(), Some(1));
}

#[test]
fn schedule_large_sigma1_needs_p() {
    let o = heavytail(&[
        "schedule",
        "--kind",
        "unknown-p",
        "--T",
        "16",
        "--sigma1",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = heavytail(&[
        "schedule",
        "--kind",
        "unknown-p",
        "--T",
        "16",
        "--sigma1",
        "1",
        "--p",
        "2",
    ]);
    assert!(stdout(&o).contains("B = 512"));
}

#[test]
fn run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let o = heavytail(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    assert!(csv.starts_with("T,mean_avg_grad_norm,stderr,n_seeds,n_diverged\n32,"));
    assert!(out.join("results.json").exists());

    // same config, different thread count: identical bytes
    let out2 = dir.path().join("out2");
    let o2 = heavytail(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert_eq!(
        csv,
        std::fs::read_to_string(out2.join("results.csv")).unwrap()
    );
    assert!(o2.status.success());
}

#[test]
fn seeds_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = heavytail(&["run", &cfg, "--seeds", "2"]);
    assert!(
        stdout(&o).lines().skip(1).all(|l| l.ends_with(",2,0")),
        "{}",
        stdout(&o)
    );
}

#[test]
fn malformed_config_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("dim = 3", "dim = ="));
    let o = heavytail(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let cfg = write_config(
        dir.path(),
        &CONFIG.replace("[32, 64, 128]", "[64, 32, 128]"),
    );
    assert_eq!(heavytail(&["run", &cfg]).status.code(), Some(1));
    assert_eq!(
        heavytail(&["run", "/nonexistent/exp.toml"]).status.code(),
        Some(1)
    );
    assert_eq!(heavytail(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn rates_synthetic_recovers_exponent() {
    let o = heavytail(&["rates", "--synthetic", "-0.2"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("fitted slope      = -0.2000"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn rates_strict_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = heavytail(&["rates", &cfg, "--tolerance", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("theoretical       = -0.2000"));
    // an impossible tolerance is only enforced under --strict
    let o = heavytail(&["rates", &cfg, "--tolerance", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("outside tolerance"));
    let o = heavytail(&["rates", &cfg, "--tolerance", "0", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_quick_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = heavytail(&["verify", "--quick", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap(),
    )
    .unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 9);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn hard_instance_report() {
    let o = heavytail(&[
        "hard-instance",
        "--p",
        "1.5",
        "--delta1",
        "7.3",
        "--l0",
        "1",
        "--sigma0",
        "2",
        "--epsilon",
        "0.01",
        "--horizon",
        "64",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("d                 = 10"));
    assert!(s.contains("iteration floor"));
    assert!(s.contains("final prog_0"));

    let o = heavytail(&[
        "hard-instance",
        "--p",
        "2",
        "--delta1",
        "1",
        "--l0",
        "1",
        "--sigma0",
        "0.1",
        "--epsilon",
        "0.01",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("q ="), "{}", stderr(&o));
}
