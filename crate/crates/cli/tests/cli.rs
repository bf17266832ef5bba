//! End-to-end tests of the `cptrl` binary.

use std::path::Path;
use std::process::{Command, Output};

fn cptrl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptrl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn toy_config(dir: &Path, n_iters: usize, n_runs: usize, workers: usize) -> String {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        format!(
            r#"
[game]
source = "generate"
seed = 3
n_agents = 2
n_states = 2
n_actions = 2
discount = 0.4

[run]
seed = 11
n_iters = {n_iters}
n_max = 12
n_runs = {n_runs}
workers = {workers}
out_dir = "out"
store_threshold = 8
tracked_state = 0
smoothing_window = 50
grad_weighting = "exact"
empirical_rewards = true
u_prime_cap = 1000.0
"#
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn generate_writes_default_benchmark_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = cptrl(&["generate", "--seed", "7", "--out", "game.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(dir.path().join("game.toml")).unwrap();
    assert!(text.contains("n_agents = 4"));
    assert!(text.contains("n_states = 5"));
    assert!(text.contains("n_actions = 3"));

    // same seed -> byte-identical file
    let out = cptrl(&["generate", "--seed", "7", "--out", "game2.toml"], dir.path());
    assert!(out.status.success());
    let text2 = std::fs::read_to_string(dir.path().join("game2.toml")).unwrap();
    assert_eq!(text, text2);

    // loads losslessly
    let spec = cpt_rl::game::GameSpec::<f64>::load(&dir.path().join("game.toml")).unwrap();
    assert_eq!(spec.n_agents, 4);
    assert_eq!(spec.to_toml_string(), text);
}

#[test]
fn train_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path(), 40, 1, 1);
    let out = cptrl(&["train", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "out/metrics.csv",
        "out/policies.csv",
        "out/value_curve.csv",
        "out/summary.toml",
        "out/config_resolved.toml",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let metrics = std::fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    assert!(metrics.starts_with("iteration,agent,v0,v1,v_smoothed,td_error,grad_norm"));
    assert_eq!(metrics.lines().count(), 1 + 40 * 2);
    let policies = std::fs::read_to_string(dir.path().join("out/policies.csv")).unwrap();
    assert_eq!(policies.lines().count(), 1 + 2 * 2 * 2);

    // the resolved config replays to the identical metrics
    let out = cptrl(
        &[
            "train",
            "--config",
            "out/config_resolved.toml",
            "--out",
            "replay",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let replayed = std::fs::read_to_string(dir.path().join("replay/metrics.csv")).unwrap();
    assert_eq!(metrics, replayed);
}

#[test]
fn train_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path(), 60, 1, 1);
    let out = cptrl(&["train", "--config", &config, "--out", "w1"], dir.path());
    assert!(out.status.success());
    let out = cptrl(
        &["train", "--config", &config, "--workers", "4", "--out", "w4"],
        dir.path(),
    );
    assert!(out.status.success());
    let a = std::fs::read_to_string(dir.path().join("w1/metrics.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("w4/metrics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scenarios_writes_schema_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_config(dir.path(), 30, 2, 2);
    let out = cptrl(&["scenarios", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/scenarios.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,agent,action,mean_probability,std_probability,ordering_runs_satisfied"
    );
    // 4 scenarios x 2 agents x 2 actions
    assert_eq!(lines.count(), 4 * 2 * 2);
    assert!(csv.lines().any(|l| l.starts_with("1,0,0,")));
    assert!(dir.path().join("out/scenario2_trace.csv").exists());
    assert!(dir.path().join("out/scenario_summary.toml").exists());
}

#[test]
fn invalid_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[cpt]\nalpha = 1.9\nbeta = 0.65\nlambda = 2.6\ngamma_w = 0.69\ndelta_w = 0.69\nx0 = 0.0\nweighting = \"tversky-kahneman\"\n").unwrap();
    let out = cptrl(
        &["train", "--config", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alpha"), "{stderr}");
}

#[test]
fn missing_game_file_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "[game]\nsource = \"file\"\npath = \"nope.toml\"\n").unwrap();
    let out = cptrl(
        &["train", "--config", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failed_check_exits_with_code_two() {
    // extreme loss aversion with a near-unit loss exponent makes the
    // subjective backup expansive, so the contraction check must fail
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(
        &path,
        r#"
[game]
source = "generate"
seed = 5
n_agents = 2
n_states = 2
n_actions = 2
discount = 0.5

[cpt]
alpha = 0.99
beta = 0.99
lambda = 50.0
gamma_w = 0.69
delta_w = 0.69
x0 = 0.0
weighting = "tversky-kahneman"

[run]
seed = 2
n_iters = 10
n_max = 8
n_runs = 1
workers = 1
out_dir = "out"
store_threshold = 8
tracked_state = 0
smoothing_window = 50
grad_weighting = "exact"
empirical_rewards = true
u_prime_cap = 1000.0
"#,
    )
    .unwrap();
    let out = cptrl(&["check", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(
        out.status.code(),
        Some(2),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn check_passes_on_small_game() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(
        &path,
        r#"
[game]
source = "generate"
seed = 5
n_agents = 2
n_states = 2
n_actions = 2
discount = 0.4

[run]
seed = 2
n_iters = 10
n_max = 8
n_runs = 1
workers = 1
out_dir = "out"
store_threshold = 8
tracked_state = 0
smoothing_window = 50
grad_weighting = "exact"
empirical_rewards = true
u_prime_cap = 1000.0
"#,
    )
    .unwrap();
    let out = cptrl(&["check", "--config", path.to_str().unwrap()], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout: {stdout}\nstderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout.matches("PASS").count(), 4, "{stdout}");
    assert!(stdout.contains("all checks passed"));
}
