//! End-to-end tests of the `whittle` binary against the shipped configs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn whittle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whittle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// First stdout line of a successful `learn`/`compare`: the run directory.
fn run_dir_of(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", stderr_of(out));
    PathBuf::from(stdout_of(out).lines().next().expect("run dir line"))
}

#[test]
fn every_shipped_config_validates() {
    for entry in std::fs::read_dir(configs().join("models")).unwrap() {
        let path = entry.unwrap().path();
        let out = whittle(&["validate", "--model", path.to_str().unwrap()]);
        assert!(out.status.success(), "{path:?}: {}", stderr_of(&out));
    }
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = whittle(&["validate", "--config", path.to_str().unwrap()]);
            assert!(out.status.success(), "{path:?}: {}", stderr_of(&out));
        }
    }
}

#[test]
fn oracle_prints_circulant_indices() {
    let model = configs().join("models/circulant.toml");
    let out = whittle(&["oracle", "--model", model.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("class,state,lambda_star,residual,bracket_width")
    );
    let lambda: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let expected = [-0.5, 0.5, 1.0, -1.0];
    assert_eq!(lambda.len(), 4);
    for (got, want) in lambda.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-6, "{lambda:?}");
    }
}

#[test]
fn validate_names_the_offending_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_rowsum.toml");
    std::fs::write(
        &path,
        "d = 2\np0 = [[1, 0], [\"1/2\", 0.4]]\np1 = [[1, 0], [0, 1]]\nr0 = [0, 1]\nr1 = [0, 1]\n",
    )
    .unwrap();
    let out = whittle(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.starts_with("error[config]:"), "{err}");
    assert!(err.contains("p0 row 2"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    let out = whittle(&["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error[usage]:"));

    let out = whittle(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_exits_one_with_io_error() {
    let out = whittle(&["oracle", "--model", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error[io]:"), "{}", stderr_of(&out));
}

#[test]
fn solver_non_convergence_exits_two() {
    // Two absorbing states with different rewards: no single average reward
    // exists, so relative value iteration cannot settle.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("multichain.toml");
    std::fs::write(
        &path,
        "d = 2\np0 = [[1, 0], [0, 1]]\np1 = [[1, 0], [0, 1]]\nr0 = [0, 1]\nr1 = [0, 1]\n",
    )
    .unwrap();
    let out = whittle(&["oracle", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).starts_with("error[solver]:"), "{}", stderr_of(&out));
}

#[test]
fn scan_indexability_passes_shipped_models() {
    for name in ["circulant.toml", "restart.toml"] {
        let model = configs().join("models").join(name);
        let out = whittle(&["scan-indexability", "--model", model.to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", stderr_of(&out));
        assert!(stdout_of(&out).contains("indexable"), "{name}");
    }
}

fn read_dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_str().unwrap().to_string(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn learn_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("circulant_eps01.toml");
    let args = [
        "learn",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--seed",
        "7",
        "--horizon",
        "600",
        "--set",
        "cadence=200",
    ];
    let dir = run_dir_of(&whittle(&args));
    let first = read_dir_files(&dir);
    assert!(first.contains_key("manifest.toml"));
    assert!(first.contains_key("run-7.csv"));
    assert!(first.contains_key("checkpoint-7.bin"));
    assert!(first.contains_key("plot_indices.csv"));

    let dir2 = run_dir_of(&whittle(&args));
    assert_eq!(dir, dir2, "same effective config must map to one directory");
    assert_eq!(first, read_dir_files(&dir));
}

#[test]
fn overrides_round_trip_into_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("circulant_eps01.toml");
    let out = whittle(&[
        "learn",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--seed",
        "3",
        "--horizon",
        "200",
        "--set",
        "policy.epsilon=0.25",
        "--set",
        "cadence=100",
    ]);
    let manifest = std::fs::read_to_string(run_dir_of(&out).join("manifest.toml")).unwrap();
    assert!(manifest.contains("\"policy.epsilon=0.25\""), "{manifest}");
    assert!(manifest.contains("epsilon = 0.25"), "{manifest}");
    assert!(manifest.contains("cadence = 100"), "{manifest}");
    assert!(manifest.contains("seeds = [3]"), "{manifest}");
    assert!(manifest.contains("horizon = 200"), "{manifest}");
}

#[test]
fn out_root_env_var_is_the_default() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("circulant_eps001.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_whittle"))
        .args([
            "learn",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "1",
            "--horizon",
            "200",
            "--set",
            "cadence=100",
        ])
        .env("WHITTLE_OUT_ROOT", tmp.path())
        .output()
        .expect("binary runs");
    let dir = run_dir_of(&out);
    assert!(dir.starts_with(tmp.path()), "{dir:?}");
    assert!(dir.join("run-1.csv").exists());
}

#[test]
fn compare_writes_reward_summary_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs().join("circulant_eps001.toml");
    let out = whittle(&[
        "compare",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--horizon",
        "400",
        "--set",
        "cadence=200",
        "--set",
        "seeds=[1,2]",
    ]);
    let dir = run_dir_of(&out);
    assert!(stdout_of(&out).contains("ratio learned/exact-index"));

    let compare = std::fs::read_to_string(dir.join("compare.csv")).unwrap();
    assert!(compare.starts_with("step,learned_median,learned_q1,learned_q3"));
    assert_eq!(compare.lines().count(), 1 + 2, "two cadence points");

    let plot = std::fs::read_to_string(dir.join("plot_rewards.csv")).unwrap();
    let series: std::collections::BTreeSet<&str> = plot
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(series.len(), 2, "{plot}");
    assert!(series.contains("learned") && series.contains("exact-index"));

    for policy in ["learned", "exact-index"] {
        for seed in ["1", "2"] {
            assert!(dir.join(policy).join(format!("run-{seed}.csv")).exists());
        }
    }
}
