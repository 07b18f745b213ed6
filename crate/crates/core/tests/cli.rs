use std::path::Path;
use std::process::{Command, Output};

use spinbath::cli::{read_csv, read_json, write_series, Format};

fn spinbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinbath")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut all = args.to_vec();
    let path_str = path.to_str().unwrap();
    all.extend_from_slice(&["--output", path_str]);
    let out = spinbath(&all);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    std::fs::read(&path).unwrap()
}

#[test]
fn case1_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.csv");
    let out = spinbath(&[
        "case1", "--seed", "42", "--n", "200", "--t-max", "50", "--steps", "2000", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("decay_time"), "{summary}");

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,re,im,abs");
    assert_eq!(lines.len(), 2001);
    assert!(!text.contains('\r'));
    for line in &lines[1..] {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 4);
        let abs = v[1].hypot(v[2]);
        assert!((v[3] - abs).abs() <= 2.0 * f64::EPSILON * abs, "{line}");
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["case2", "--seed", "9", "--n", "30", "--p", "3", "--steps", "500", "--phases", "random"];
    assert_eq!(run_to(dir.path(), "a.csv", &args), run_to(dir.path(), "b.csv", &args));
    let json = ["general", "--seed", "9", "--n", "6", "--steps", "50", "--format", "json"];
    assert_eq!(run_to(dir.path(), "a.json", &json), run_to(dir.path(), "b.json", &json));
}

#[test]
fn r3_does_not_depend_on_n() {
    let dir = tempfile::tempdir().unwrap();
    let small = run_to(dir.path(), "small.csv", &["r3", "--seed", "42", "--n", "10", "--p", "10", "--t-max", "50"]);
    let large = run_to(dir.path(), "large.csv", &["r3", "--seed", "42", "--n", "1000", "--p", "10", "--t-max", "50"]);
    assert_eq!(small, large);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("s.csv", Format::Csv), ("s.json", Format::Json)] {
        let fmt = if format == Format::Csv { "csv" } else { "json" };
        let bytes = run_to(dir.path(), name, &["case1", "--n", "40", "--steps", "300", "--format", fmt]);
        let path = dir.path().join(name);
        let series = match format {
            Format::Csv => read_csv(&path, "r1").unwrap(),
            Format::Json => read_json(&path, "r1").unwrap(),
        };
        let mut again = Vec::new();
        write_series(&series, format, &mut again).unwrap();
        assert_eq!(again, bytes);
    }
}

#[test]
fn stdout_carries_data_without_output_flag() {
    let out = spinbath(&["case1", "--n", "5", "--steps", "3", "--t-max", "1", "--dwell", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,re,im,abs\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn oracle_check_passes() {
    let out = spinbath(&["oracle-check", "--seeds", "20", "--n-max", "10", "--points", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("PASS"), "{report}");
}

#[test]
fn invalid_arguments_exit_2() {
    for args in [
        &["case2", "--n", "10"][..],
        &["case1", "--p", "3"],
        &["r3", "--n", "5", "--p", "6"],
        &["case1", "--steps", "0"],
        &["case1", "--g-min", "1", "--g-max", "0.5"],
        &["case1", "--bogus"],
        &["case2", "--n", "4", "--p", "2", "--block", "1,2,3"],
    ] {
        let out = spinbath(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    let out = spinbath(&["r3", "--n", "5", "--p", "6"]);
    assert!(stderr(&out).contains("p"), "{}", stderr(&out));
}

#[test]
fn oracle_cap_exits_3() {
    let out = spinbath(&["oracle-check", "--n-max", "20"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("14"), "{}", stderr(&out));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "command=case1\nseed=42\nn=200\nt_max=20\nsteps=100\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = run_to(dir.path(), "file.csv", &["--config", cfg]);
    let from_flags = run_to(dir.path(), "flags.csv", &["case1", "--seed", "42", "--n", "200", "--t-max", "20", "--steps", "100"]);
    assert_eq!(from_file, from_flags);

    let overridden = run_to(dir.path(), "over.csv", &["--config", cfg, "--n", "100"]);
    let direct = run_to(dir.path(), "direct.csv", &["case1", "--seed", "42", "--n", "100", "--t-max", "20", "--steps", "100"]);
    assert_eq!(overridden, direct);
}

#[test]
fn config_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "foo=1\n").unwrap();
    let out = spinbath(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("foo") && msg.contains(":1"), "{msg}");

    let out = spinbath(&["--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("out.csv");
    let out = spinbath(&["case1", "--n", "5", "--steps", "10", "--output", path.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!path.exists());

    let path = dir.path().join("never.csv");
    let out = spinbath(&["case2", "--n", "5", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn sweep_and_recurrence_run() {
    let out = spinbath(&["sweep", "--n", "50", "--seeds", "5", "--steps", "200", "--n-values", "10,50"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = spinbath(&["recurrence", "--n", "2", "--t-max", "200", "--steps", "4000"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}
