use std::process::Command;

use listlab::output::read_csv;
use listlab::{parse_config, run, PartialConfig};

fn listlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_listlab"))
}

const CHANNEL: [&str; 10] = [
    "--n", "3", "--P", "4", "--N", "1", "--delta", "0.5", "--seed", "11",
];

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "experiment = \"ic-ls\"\nn = 2\nP = 4.0\nN = 1.0\ndelta = 0.5\nseed = 5\ntrials = 4\nsearch = \"net\"\n",
    )
    .unwrap();
    let out_path = dir.path().join("rows.csv");
    let status = listlab()
        .args([
            "--config",
            cfg_path.to_str().unwrap(),
            "--trials",
            "2",
            "--out",
        ])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# trials = 2\n"), "{text}");
    assert!(text.contains("# search = \"net\"\n"), "{text}");
    let rows = read_csv(text.as_bytes()).unwrap();
    assert!(rows.iter().all(|r| r.trial < 2 && r.experiment == "ic-ls"));
    assert!(rows
        .iter()
        .any(|r| r.metric_name == "list_size" && r.mode == "net"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let out = listlab()
        .arg("awgn")
        .args([
            "--n", "3", "--P", "4", "--N", "-1", "--delta", "0.5", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`N`"));

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(&cfg_path, "n = 3\nsigma = 2.0\n").unwrap();
    let out = listlab()
        .args(["--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sigma") && err.contains("line 2"), "{err}");
}

#[test]
fn budget_exhaustion_exits_with_code_three_and_keeps_rows() {
    let out = listlab()
        .arg("reduction-check")
        .args(CHANNEL)
        .args(["--trials", "2", "--budget", "1", "--set", "codewords=30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let rows = read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.metric_name == "budget_exceeded"));
}

#[test]
fn zero_trials_give_a_header_only_csv() {
    let out = listlab()
        .arg("spherical-ls")
        .args(CHANNEL)
        .args(["--trials", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        body,
        ["experiment,n,P,N,delta,seed,trial,metric_name,metric_value,mode,extra"]
    );
}

#[test]
fn same_seed_same_bytes_and_rows_round_trip() {
    let flags = PartialConfig {
        experiment: Some(listlab::Experiment::Awgn),
        n: Some(4),
        power: Some(4.0),
        noise: Some(1.0),
        delta: Some(0.5),
        seed: Some(99),
        trials: Some(3),
        mc_trials: Some(500),
        ..Default::default()
    };
    let cfg = parse_config(None, flags).unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.to_csv_bytes(), b.to_csv_bytes());
    let back = read_csv(a.to_csv_bytes().as_slice()).unwrap();
    assert_eq!(back, a.rows);
}
