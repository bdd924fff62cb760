use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qwork(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwork"))
        .args(args)
        .output()
        .expect("spawn qwork")
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--n", "300", "--trials", "3", "--out", out];
    args.extend_from_slice(extra);
    qwork(&args)
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("rounds.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("trial,k,stage,group,slot,ax,ay,az,eps_k"));
    assert_eq!(lines.count(), 900);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["zeta_mode"], "practical");
    assert_eq!(summary["trial_seeds"].as_array().unwrap().len(), 3);
    assert_eq!(summary["config"]["n"], 300);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(run_into(d.path(), &["--engine", "jc", "--seed", "42"]).status.success());
    }
    for f in ["rounds.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn no_csv_skips_rounds() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &["--no-csv"]).status.success());
    assert!(!dir.path().join("rounds.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "strategy = \"twophase\"\nalpha = 0.1\nn = 500\ntrials = 2\nzeta-paper = true\npsi = \"0,0,-1\"\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = qwork(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "200",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["n"], 200);
    assert_eq!(summary["config"]["strategy"], "twophase");
    assert_eq!(summary["config"]["alpha"], 0.1);
    assert_eq!(summary["zeta_mode"], "proof");
    assert_eq!(summary["config"]["psi"], "0,0,-1");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qwork(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(qwork(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qwork(&["run", "--n", "0", "--no-csv"]).status.code(), Some(1));
    assert_eq!(qwork(&["run", "--delta", "1.5", "--no-csv"]).status.code(), Some(1));
    assert_eq!(qwork(&["run", "--engine", "steam", "--no-csv"]).status.code(), Some(1));
    assert_eq!(qwork(&["run", "--zeta", "2", "--zeta-paper"]).status.code(), Some(1));
    assert_eq!(qwork(&["sweep", "--ns", "100,50,200"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    let out = qwork(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn help_and_version_exit_zero() {
    let out = qwork(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify"));
    assert_eq!(qwork(&["run", "--help"]).status.code(), Some(0));
    assert_eq!(qwork(&["--version"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_cells_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = qwork(&[
        "sweep",
        "--ns",
        "256,512,1024",
        "--alphas",
        "0.1,0.3",
        "--trials",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("adaptive/n512/summary.json").exists());
    assert!(dir.path().join("twophase/alpha0.3/n1024/summary.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["points"].as_array().unwrap().len(), 3 + 3 * 2);
    assert!(report["ratio_at_largest_n"].is_number());
}
