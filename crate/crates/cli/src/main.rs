//! `cptrl`: experiment runner for CPT risk-sensitive actor-critic training
//! on network aggregative Markov games.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use cpt_rl::actor::{exact_sigma_distribution, grad_value, PolicyTable};
use cpt_rl::cpt::{cpt_estimate, cpt_exact, CptParams, DiscreteDistribution};
use cpt_rl::critic::{check_contraction, solve_value_fixed_point};
use cpt_rl::game::{generate_experiment, ExperimentOverrides, GameSpec};
use cpt_rl::rng::derive_stream;
use cpt_rl::trainer::{metrics_csv, run_scenarios, scenario_csv, train, TrainingResult};

#[derive(Parser)]
#[command(
    name = "cptrl",
    about = "CPT risk-sensitive actor-critic on network aggregative Markov games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration file (TOML); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the run seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the worker-thread count from the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (or file for `generate`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generates a randomized benchmark game and writes it to a TOML file.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Trains all agents on one game and writes metrics, policies, and a
    /// summary.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Runs the four loss-aversion scenarios over shared environment seeds.
    Scenarios {
        #[command(flatten)]
        common: Common,
    },
    /// Runs the invariant suite: contraction report, gradient
    /// finite-difference check, and estimator consistency.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { common } => cmd_generate(&common),
        Command::Train { common } => cmd_train(&common),
        Command::Scenarios { common } => cmd_scenarios(&common),
        Command::Check { common } => cmd_check(&common),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let diagnostic = err
                .downcast_ref::<cpt_rl::Error>()
                .is_some_and(|e| e.is_diagnostic());
            if diagnostic {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.run.seed = seed;
        if config.game.source == "generate" && common.config.is_none() {
            // bare `--seed` without a config also drives the generator
            config.game.seed = Some(seed);
        }
    }
    if let Some(workers) = common.workers {
        config.run.workers = workers;
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common, config: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.run.out_dir));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_generate(common: &Common) -> anyhow::Result<ExitCode> {
    let config = load_config(common)?;
    let seed = common.seed.or(config.game.seed).unwrap_or(7);
    let spec: GameSpec<f64> = generate_experiment(seed, &config.overrides());
    let path = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("game.toml"));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    spec.save(&path)?;
    println!(
        "wrote {} (seed {seed}: {} agents, {} states, {} actions)",
        path.display(),
        spec.n_agents,
        spec.n_states,
        spec.n_actions
    );
    Ok(ExitCode::SUCCESS)
}

/// Mean-over-runs tracked-state value curve with a trailing-mean column.
fn value_curve_csv(results: &[TrainingResult<f64>], tracked: usize, window: usize) -> String {
    let n_agents = results[0].policies.len();
    let min_iters = results.iter().map(|r| r.iterations_run).min().unwrap_or(0);
    let mut out = String::from("iteration");
    for agent in 0..n_agents {
        out.push_str(&format!(",v_agent{agent},v_smoothed_agent{agent}"));
    }
    out.push('\n');

    // per agent: mean over runs of the raw tracked value per iteration
    let mut raw = vec![vec![0.0f64; min_iters]; n_agents];
    for result in results {
        for row in &result.metrics {
            if row.iteration < min_iters {
                raw[row.agent][row.iteration] += row.values[tracked];
            }
        }
    }
    let inv = 1.0 / results.len() as f64;
    for series in raw.iter_mut() {
        for v in series.iter_mut() {
            *v *= inv;
        }
    }
    let window = window.max(1);
    for t in 0..min_iters {
        out.push_str(&format!("{t}"));
        for series in raw.iter() {
            let from = t.saturating_sub(window - 1);
            let seg = &series[from..=t];
            let smoothed: f64 = seg.iter().sum::<f64>() / seg.len() as f64;
            out.push_str(&format!(",{},{}", series[t], smoothed));
        }
        out.push('\n');
    }
    out
}

fn cmd_train(common: &Common) -> anyhow::Result<ExitCode> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    // the resolved config makes the run replayable as-is
    write(&dir.join("config_resolved.toml"), &config.to_toml_string())?;
    let spec = config.game_spec()?;
    let params = config.agent_params(spec.n_agents)?;
    let base_cfg = config.trainer_config()?;

    let mut results = Vec::with_capacity(config.run.n_runs);
    for run in 0..config.run.n_runs {
        let mut cfg = base_cfg.clone();
        cfg.seed = config.run.seed.wrapping_add(run as u64);
        let result = train(&spec, &params, &cfg)?;
        println!(
            "run {run}: seed {}, {} iterations, wall {:?}",
            cfg.seed, result.iterations_run, result.wall_clock
        );
        results.push(result);
    }

    write(&dir.join("metrics.csv"), &metrics_csv(&results[0], spec.n_states))?;

    // policies averaged over runs, in the (agent, state, action) schema
    let mut mean_policy = String::from("agent,state,action,probability\n");
    for agent in 0..spec.n_agents {
        for state in 0..spec.n_states {
            for action in 0..spec.n_actions {
                let mean: f64 = results
                    .iter()
                    .map(|r| r.policies[agent].probs(state)[action])
                    .sum::<f64>()
                    / results.len() as f64;
                mean_policy.push_str(&format!("{agent},{state},{action},{mean}\n"));
            }
        }
    }
    write(&dir.join("policies.csv"), &mean_policy)?;
    write(
        &dir.join("value_curve.csv"),
        &value_curve_csv(&results, config.run.tracked_state, config.run.smoothing_window),
    )?;

    let mut summary = String::new();
    summary.push_str(&format!("seed = {}\n", config.run.seed));
    summary.push_str(&format!("n_runs = {}\n", config.run.n_runs));
    summary.push_str(&format!("n_agents = {}\n", spec.n_agents));
    summary.push_str(&format!("n_states = {}\n", spec.n_states));
    summary.push_str(&format!("discount = {}\n", spec.discount));
    let total_wall: f64 = results.iter().map(|r| r.wall_clock.as_secs_f64()).sum();
    summary.push_str(&format!("wall_clock_seconds = {total_wall}\n"));
    for (run, result) in results.iter().enumerate() {
        summary.push_str(&format!("\n[[runs]]\nrun = {run}\n"));
        summary.push_str(&format!("iterations = {}\n", result.iterations_run));
        let last_grad = result
            .metrics
            .iter()
            .rev()
            .take(spec.n_agents)
            .map(|r| r.grad_norm)
            .fold(0.0f64, f64::max);
        summary.push_str(&format!("final_max_grad_norm = {last_grad}\n"));
        summary.push_str(&format!(
            "converged_early = {}\n",
            result.iterations_run < config.run.n_iters
        ));
    }
    write(&dir.join("summary.toml"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_scenarios(common: &Common) -> anyhow::Result<ExitCode> {
    let config = load_config(common)?;
    let dir = out_dir(common, &config)?;
    write(&dir.join("config_resolved.toml"), &config.to_toml_string())?;
    let cfg = config.trainer_config()?;
    let sweep = run_scenarios(config.run.seed, config.run.n_runs, &cfg, &config.overrides())?;

    // spec schema plus an ordering-check column (first agent's P(action 0)
    // weakly increasing across scenarios 1 -> 3 -> 4, counted over runs)
    let base = scenario_csv(&sweep);
    let mut csv = String::new();
    for (i, line) in base.lines().enumerate() {
        csv.push_str(line);
        if i == 0 {
            csv.push_str(",ordering_runs_satisfied");
        } else {
            csv.push_str(&format!(",{}", sweep.ordering_satisfied));
        }
        csv.push('\n');
    }
    write(&dir.join("scenarios.csv"), &csv)?;

    // scenario-2 tracked-state trace of the first agent, mean over runs
    let traces = &sweep.tracked_traces[1];
    let min_len = traces.iter().map(Vec::len).min().unwrap_or(0);
    let window = config.run.smoothing_window.max(1);
    let mut trace_csv = String::from("iteration,mean_value,smoothed_value\n");
    let mean: Vec<f64> = (0..min_len)
        .map(|t| traces.iter().map(|tr| tr[t]).sum::<f64>() / traces.len() as f64)
        .collect();
    for t in 0..min_len {
        let from = t.saturating_sub(window - 1);
        let seg = &mean[from..=t];
        let smoothed: f64 = seg.iter().sum::<f64>() / seg.len() as f64;
        trace_csv.push_str(&format!("{t},{},{smoothed}\n", mean[t]));
    }
    write(&dir.join("scenario2_trace.csv"), &trace_csv)?;

    let mut summary = String::new();
    summary.push_str(&format!("base_seed = {}\n", config.run.seed));
    summary.push_str(&format!("n_runs = {}\n", sweep.n_runs));
    summary.push_str(&format!(
        "ordering_runs_satisfied = {}\n",
        sweep.ordering_satisfied
    ));
    for outcome in &sweep.outcomes {
        summary.push_str(&format!(
            "\n[[scenario]]\nindex = {}\nfirst_agent_p0 = {}\n",
            outcome.scenario, outcome.mean_action_probs[0][0]
        ));
    }
    write(&dir.join("scenario_summary.toml"), &summary)?;

    println!(
        "ordering satisfied in {}/{} runs",
        sweep.ordering_satisfied, sweep.n_runs
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(common: &Common) -> anyhow::Result<ExitCode> {
    let config = load_config(common)?;
    let spec = config.game_spec()?;
    let params = config.agent_params(spec.n_agents)?;
    let mut all_pass = true;

    // 1. contraction of the exact backup, subjective and risk-neutral
    let policies: Vec<PolicyTable<f64>> = (0..spec.n_agents)
        .map(|i| PolicyTable::new(i, spec.n_states, spec.n_actions))
        .collect();
    let mut rng = derive_stream(config.run.seed, 0xC0, 0);
    let report = check_contraction(&spec, &policies, &params[0], 100, &mut rng)?;
    let pass = report.max_ratio < 1.0;
    all_pass &= pass;
    println!(
        "CHECK contraction (subjective params): {} (max ratio {:.4} over {} pairs)",
        if pass { "PASS" } else { "FAIL" },
        report.max_ratio,
        report.n_pairs
    );
    let rn = check_contraction(
        &spec,
        &policies,
        &CptParams::risk_neutral(),
        100,
        &mut rng,
    )?;
    let pass = rn.max_ratio <= spec.discount + 1e-9;
    all_pass &= pass;
    println!(
        "CHECK contraction (risk-neutral <= discount): {} (max ratio {:.6}, discount {})",
        if pass { "PASS" } else { "FAIL" },
        rn.max_ratio,
        spec.discount
    );

    // 2. gradient vs central finite differences on a small game
    let small = generate_experiment::<f64>(
        config.run.seed,
        &ExperimentOverrides {
            n_agents: Some(2),
            n_states: Some(2),
            n_actions: Some(2),
            discount: Some(0.5),
            self_by_action: false,
        },
    );
    let mut small_policies: Vec<PolicyTable<f64>> =
        (0..2).map(|i| PolicyTable::new(i, 2, 2)).collect();
    let mut grng = derive_stream(config.run.seed, 0xC1, 0);
    for p in small_policies.iter_mut() {
        for t in p.theta_mut() {
            *t = rand::Rng::gen::<f64>(&mut grng) - 0.5;
        }
    }
    let cpt_params = params[0];
    let sigma = exact_sigma_distribution(&small, 0, &small_policies);
    let fp = solve_value_fixed_point(&small, &small_policies[0], &sigma, &cpt_params, 1e-13, 20_000)?;
    if fp.residual > 1e-9 {
        all_pass = false;
        println!(
            "CHECK gradient vs finite differences: FAIL (value fixed point did not converge, \
             residual {:.3e})",
            fp.residual
        );
    } else {
        let grad = grad_value(&small_policies[0], &fp.values, &small, &sigma, &cpt_params)?;
        let h = 1e-5;
        let objective = |p: &PolicyTable<f64>| -> anyhow::Result<f64> {
            let fp = solve_value_fixed_point(&small, p, &sigma, &cpt_params, 1e-13, 20_000)?;
            Ok(small
                .initial_dist
                .iter()
                .zip(fp.values.values.iter())
                .map(|(&p0, &v)| p0 * v)
                .sum())
        };
        let mut fd = Vec::with_capacity(grad.len());
        for k in 0..grad.len() {
            let mut hi = small_policies[0].clone();
            hi.theta_mut()[k] += h;
            let mut lo = small_policies[0].clone();
            lo.theta_mut()[k] -= h;
            fd.push((objective(&hi)? - objective(&lo)?) / (2.0 * h));
        }
        let dot: f64 = grad.iter().zip(fd.iter()).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cosine = dot / (norm(&grad) * norm(&fd));
        let pass = cosine >= 0.999;
        all_pass &= pass;
        println!(
            "CHECK gradient vs finite differences: {} (cosine {:.6})",
            if pass { "PASS" } else { "FAIL" },
            cosine
        );
    }

    // 3. estimator consistency on the two-point benchmark distribution
    let dist = DiscreteDistribution::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
    let bench = CptParams::loss_averse(2.6);
    let exact = cpt_exact(&dist, &bench);
    let mut total_err = 0.0;
    let n_seeds = 10;
    for s in 0..n_seeds {
        let mut rng = derive_stream(config.run.seed, 0xC2, s);
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                if rand::Rng::gen::<f64>(&mut rng) < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        total_err += (cpt_estimate(&samples, &bench)? - exact).abs();
    }
    let mean_err = total_err / n_seeds as f64;
    let pass = mean_err <= 0.01;
    all_pass &= pass;
    println!(
        "CHECK estimator consistency: {} (mean |error| {:.5} over {n_seeds} seeds)",
        if pass { "PASS" } else { "FAIL" },
        mean_err
    );

    if all_pass {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: one or more invariant checks failed");
        Ok(ExitCode::from(2))
    }
}
