use std::path::Path;
use std::process::{Command, Output};

fn stlab(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stlab"));
    c.args(args).env_remove("STLAB_OUT");
    if let Some(d) = out_env {
        c.env("STLAB_OUT", d);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn passing_experiment_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub");
    let o = stlab(&["subelliptic", "--out", out.to_str().unwrap(), "--seed", "3"], None);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("subelliptic: PASS"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["pass"], true);
}

#[test]
fn failed_verdict_exits_one() {
    // The δ = 0 control shows no growth on a finite box, so this run fails.
    let o = stlab(&["local-compactness"], None);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("control_grows: FAIL"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&stlab(&["no-such-experiment"], None)), 2);
    assert_eq!(code(&stlab(&["lap", "--seed", "minus-one"], None)), 2);
    assert_eq!(code(&stlab(&["run"], None)), 2);
    assert_eq!(code(&stlab(&["suite"], None)), 2);

    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&stlab(&["run", "--config", missing.to_str().unwrap()], None)), 2);

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[experiment]\nname = \"lap\"\nlamda = 1.0\n").unwrap();
    let o = stlab(&["run", "--config", typo.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
}

#[test]
fn subcommand_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sub.toml");
    std::fs::write(&cfg, "[experiment]\nname = \"subelliptic\"\n").unwrap();
    assert_eq!(code(&stlab(&["schwartz", "--config", cfg.to_str().unwrap()], None)), 2);
    assert_eq!(code(&stlab(&["subelliptic", "--config", cfg.to_str().unwrap()], None)), 0);
    assert_eq!(code(&stlab(&["run", "--config", cfg.to_str().unwrap()], None)), 0);
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = stlab(&["schwartz"], Some(dir.path()));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("payload.json").is_file());
}

#[test]
fn same_seed_same_payload() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&stlab(&["symbols-appendix", "--threads", "1", "--out", d.path().to_str().unwrap()], None)), 0);
    }
    let pa = std::fs::read(a.path().join("payload.json")).unwrap();
    let pb = std::fs::read(b.path().join("payload.json")).unwrap();
    assert_eq!(pa, pb);
}

#[test]
fn suite_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(
        &cfg,
        "[[runs]]\n[runs.experiment]\nname = \"subelliptic\"\n\n[[runs]]\n[runs.experiment]\nname = \"local-compactness\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = stlab(&["suite", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("suite: 1 passed, 1 failed"));
    assert!(out.join("00-subelliptic/report.json").is_file());
    assert!(out.join("01-local-compactness/report.json").is_file());
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("suite.json")).unwrap()).unwrap();
    assert_eq!(s["pass"], false);

    let ok = dir.path().join("ok.toml");
    std::fs::write(&ok, "[[runs]]\n[runs.experiment]\nname = \"schwartz\"\n").unwrap();
    assert_eq!(code(&stlab(&["suite", "--config", ok.to_str().unwrap()], None)), 0);
}
