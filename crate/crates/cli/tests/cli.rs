use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dispersive_flow::config::parse_config;
use dispersive_flow::diagnostics::csv_row;
use dispersive_flow::experiment::{read_snapshots, recompute_diagnostics};

fn dflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dflow")).args(args).output().expect("dflow runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn small_run(out: &Path) -> String {
    format!(
        "target = \"s2\"\nn = 64\nt_end = 0.02\ntrack_energy = true\ndiag_order = 2\nsnapshot_stride = 50\noutput_dir = {:?}\n",
        out.display().to_string()
    )
}

#[test]
fn describe_output_parses_back_to_itself() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["conservation-s2", "gauge-s6", "epsilon-continuation", "fukumoto-miyazaki"] {
        let first = dflow(&["describe", "--preset", preset, "--t-end", "0.3"]);
        assert!(first.status.success());
        let text = String::from_utf8(first.stdout).unwrap();
        let path = write(dir.path(), "resolved.toml", &text);
        let second = dflow(&["describe", &path]);
        assert_eq!(String::from_utf8(second.stdout).unwrap(), text, "{preset}");
    }
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "target = \"s2\"\nepsilonn = 1e-3\n");
    let out = dflow(&["run", &path]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("epsilonn") && err.contains("line 2"), "{err}");
}

#[test]
fn vanishing_a_without_regularization_is_rejected() {
    let out = dflow(&["check", "--a", "0", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("a ≠ 0"));
}

#[test]
fn fukumoto_miyazaki_preset_refuses_other_b() {
    let out = dflow(&["describe", "--preset", "fukumoto-miyazaki", "--b", "0.2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = dflow(&["describe", "--preset", "fukumoto-miyazaki", "--a", "-3"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("b = -1.5"));
}

#[test]
fn check_subcommand_reports_verdicts() {
    let out = dflow(&["check", "--n", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.contains("[PASS]")), "{text}");
    assert!(text.contains("check appendix"));
}

#[test]
fn snapshots_reload_to_recorded_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_run(dir.path());
    let cfg_path = write(dir.path(), "run.toml", &text);
    let out = dflow(&["run", &cfg_path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let states = read_snapshots(&dir.path().join("snapshots.jsonl")).unwrap();
    let records = recompute_diagnostics(&parse_config(&text).unwrap(), &states);
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["t", "l2", "h1", "h2", "N_m", "E", "constraint", "dissipation_residual", "gauge_bound"]);
    let dissipation = header.iter().position(|h| *h == "dissipation_residual").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), records.len());
    for (row, r) in rows.iter().zip(&records) {
        let again = csv_row(r);
        for (i, (got, expect)) in row.split(',').zip(again.split(',')).enumerate() {
            if i == dissipation {
                continue;
            }
            let (g, e): (f64, f64) = (got.parse().unwrap(), expect.parse().unwrap());
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0), "{}: {g} vs {e}", header[i]);
        }
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (i, strict) in [false, false, true].into_iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let path = write(dir.path(), &format!("run{i}.toml"), &small_run(&out_dir));
        let mut args = vec!["run", path.as_str()];
        if strict {
            args.push("--strict");
        }
        assert!(dflow(&args).status.success());
        csvs.push(fs::read(out_dir.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn sweep_merges_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = dflow(&[
        "sweep", "--n", "32", "--t-end", "0.01", "--output", out_dir.to_str().unwrap(), "--over", "b", "--values", "0.5,1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let merged: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("sweep.json")).unwrap()).unwrap();
    let entries = merged.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["label"], "b=0.5");
    assert_eq!(entries[1]["summary"]["termination"], "completed");
    assert!(out_dir.join("b=1").join("summary.json").exists());
}

#[test]
fn continuation_writes_one_directory_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cont");
    let out = dflow(&[
        "run", "--n", "32", "--t-end", "0.01", "--epsilon", "1e-2", "--epsilon-schedule", "1e-2,1e-3",
        "--output", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some());
    for i in 0..2 {
        assert!(out_dir.join(format!("eps-{i}")).join("diagnostics.csv").exists());
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("continuation.json")).unwrap()).unwrap();
    assert_eq!(report["gaps"].as_array().unwrap().len(), 1);
}

#[test]
fn unstable_step_exits_with_termination_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dflow(&[
        "run", "--n", "32", "--dt", "0.5", "--output", dir.path().to_str().unwrap(), "--t-end", "1",
    ]);
    let code = out.status.code().unwrap();
    assert!(code == 3 || code == 4, "exit {code}: {}", String::from_utf8_lossy(&out.stdout));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let expect = if code == 3 { "tube_exceeded" } else { "blowup_detected" };
    assert_eq!(summary["termination"], expect);
}
