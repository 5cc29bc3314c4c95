use std::fs;
use std::path::Path;
use std::process::Command;

use goodhart_arena::analysis::conditional_correlation;
use goodhart_arena::engine::ReplicateStreams;
use goodhart_arena::harness::{
    list_scenarios, load_config, parse_config, read_report, run_experiment, ConfigError, RunOptions, SUMMARY_FILE,
    TRACE_FILE, TRACE_HEADER,
};
use goodhart_arena::scenarios::{theft_sample, ScenarioId, ScenarioSpec};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_goodhart-arena");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn run_to(text: &str, dir: &Path) -> goodhart_arena::harness::RunManifest {
    run_experiment(
        &parse_config(text).unwrap(),
        &RunOptions {
            output_dir: Some(dir.to_path_buf()),
            jobs: None,
        },
    )
    .unwrap()
}

fn summary_lines(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join(SUMMARY_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn every_shipped_config_loads() {
    let mut seen = Vec::new();
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen.push(cfg.scenario());
    }
    for id in ScenarioId::ALL {
        assert!(seen.contains(&id), "no sample config for {id}");
    }
}

#[test]
fn same_config_twice_gives_identical_files() {
    let text = r#"{"scenario": "s4b", "replicates": 12, "master_seed": 3}"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ma, mb) = (run_to(text, a.path()), run_to(text, b.path()));
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_digest, mb.config_digest);
}

#[test]
fn sweep_of_three_points_gives_three_hundred_rows() {
    let dir = tempfile::tempdir().unwrap();
    run_to(
        r#"{"scenario": "s0", "sweep": {"grid": [1, 10, 100]}, "replicates": 100}"#,
        dir.path(),
    );
    let rows = summary_lines(dir.path());
    assert_eq!(rows.len(), 300);
    assert_eq!(rows.iter().filter(|r| r["pressure"] == 100).count(), 100);
}

#[test]
fn trace_rows_are_unique_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_to(
        r#"{"scenario": "s0", "sweep": {"grid": [1, 3]}, "replicates": 30}"#,
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let mut keys = std::collections::HashSet::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        assert!(keys.insert((
            f[0].to_string(),
            f[1].to_string(),
            f[2].to_string(),
            f[3].to_string(),
            f[4].to_string()
        )));
        let v: f64 = f[5].parse().unwrap();
        assert_eq!(v.to_string(), f[5]);
    }
    assert_eq!(keys.len(), 2 * 30 * 16);
}

#[test]
fn theft_summary_matches_conditional_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"scenario": "s3b", "params": {"population_size": 20000}, "replicates": 2, "master_seed": 8}"#;
    run_to(text, dir.path());
    let rows = summary_lines(dir.path());
    let ScenarioSpec::S3b(cfg) = parse_config(text).unwrap().spec else {
        unreachable!()
    };
    for (r, row) in rows.iter().enumerate() {
        let sample = theft_sample(&cfg, &ReplicateStreams::new(8, ScenarioId::S3b.tag(), r as u64)).unwrap();
        let c = conditional_correlation(
            &sample.opponent_goal,
            &sample.opponent_metric(),
            &sample.selection_mask(),
        )
        .unwrap();
        assert_eq!(row["corr_full"].as_f64().unwrap(), c.r_full);
        assert_eq!(row["corr_selected"].as_f64().unwrap(), c.r_selected);
    }
}

#[test]
fn summary_carries_scenario_fields() {
    let cases = [
        (r#"{"scenario": "s2"}"#, "welfare_gap"),
        (r#"{"scenario": "s4c", "params": {"horizon": 100}}"#, "bias"),
        (
            r#"{"scenario": "s5", "params": {"attack": "label_flip", "test_size": 100}}"#,
            "accuracy_attacked",
        ),
    ];
    for (text, key) in cases {
        let dir = tempfile::tempdir().unwrap();
        run_to(text, dir.path());
        let row = &summary_lines(dir.path())[0];
        for k in [
            "scenario",
            "replicate",
            "pressure",
            "terminal_metric",
            "terminal_goal",
            key,
        ] {
            assert!(row.get(k).is_some(), "{text}: missing {k}");
        }
    }
}

#[test]
fn invariant_error_names_precondition() {
    let e = parse_config(r#"{"scenario": "s1a", "params": {"agent_count": 2, "contribution_cap": 0.5}}"#).unwrap_err();
    assert!(matches!(e, ConfigError::Invariant { .. }));
    assert_eq!(e.path(), Some("params.contribution_cap"));
}

#[test]
fn registry_lists_ten_ids() {
    let r = list_scenarios();
    assert_eq!(r.len(), 10);
    assert_eq!(r[2].id, ScenarioId::S1b);
}

#[test]
fn cli_list() {
    let out = Command::new(BIN).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("s1b"));
    assert!(text.contains("catastrophic threshold"));
    assert!(text.find("s0").unwrap() < text.find("s5").unwrap());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scenario": "s1b", "params": {"tresholdT": 1}}"#).unwrap();
    let out = Command::new(BIN).arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tresholdT"));

    let missing = Command::new(BIN)
        .args(["run", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let no_sweep = Command::new(BIN)
        .arg("sweep")
        .arg(configs().join("s1b_threshold.json"))
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(no_sweep.status.code(), Some(2));

    let no_run = Command::new(BIN)
        .arg("report")
        .arg(dir.path().join("nothing"))
        .output()
        .unwrap();
    assert_eq!(no_run.status.code(), Some(3));
}

#[test]
fn cli_run_seed_jobs_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("s1b_quantilizer.json");
    let run = |name: &str, jobs: &str| {
        let out = Command::new(BIN)
            .arg("run")
            .arg(&cfg)
            .args(["--seed", "42", "--out"])
            .arg(dir.path().join(name))
            .env("GOODHART_ARENA_JOBS", jobs)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(dir.path().join(name).join(TRACE_FILE)).unwrap()
    };
    assert_eq!(run("one", "1"), run("eight", "8"));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 42);

    let report = Command::new(BIN)
        .arg("report")
        .arg(dir.path().join("one"))
        .output()
        .unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8(report.stdout).unwrap().contains("checksums"));
    assert!(read_report(&dir.path().join("eight")).is_ok());
}

#[test]
fn cli_sweep_writes_sweep_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(
        &cfg,
        r#"{"scenario": "s1b", "sweep": {"grid": [1, 2, 4]}, "replicates": 30}"#,
    )
    .unwrap();
    let out = Command::new(BIN)
        .arg("sweep")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let sweep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["divergence"]["found"], true);
    assert_eq!(sweep["divergence"]["pressure"], 2);
}
