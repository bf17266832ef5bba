// frozen high-precision oracle constants; index loops mirror matrix notation
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). Tolerances are pinned here,
//! not configurable.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;

use cpt_rl::actor::{
    exact_sigma_distribution, grad_value, solve_eta, subjective_transition, PolicyTable,
    SigmaDistribution,
};
use cpt_rl::cpt::{cpt_estimate, cpt_exact, CptParams, DiscreteDistribution};
use cpt_rl::critic::{check_contraction, solve_value_fixed_point, td_apply, ValueTable};
use cpt_rl::game::{generate_experiment, ExperimentOverrides, GameSpec};
use cpt_rl::rng::derive_stream;
use cpt_rl::trainer::{metrics_csv, run_scenarios, train, ScenarioSweep, TrainerConfig};

fn report(criterion: &str, pass: bool, details: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} - {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {details}");
}

/// Benchmark two-point distribution and the subjective parameter set used
/// throughout (alpha = beta = 0.65, lambda = 2.6, curvatures 0.69).
fn two_point() -> DiscreteDistribution<f64> {
    DiscreteDistribution::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap()
}

fn curved_params() -> CptParams<f64> {
    CptParams::loss_averse(2.6)
}

/// Criterion 1: the sorted-sample estimator reproduces the exact CPT value
/// of the two-point distribution within 0.01 at n = 1e5, averaged over ten
/// seeds, in under five seconds.
#[test]
fn acceptance_1_estimator_consistency() {
    let start = Instant::now();
    let params = curved_params();
    let exact = cpt_exact(&two_point(), &params);
    // cross-check against the independently computed high-precision value
    assert!((exact - (-0.72638007923844740008)).abs() < 1e-12);

    let n = 100_000;
    let mut total_err = 0.0;
    for seed in 0..10u64 {
        let mut rng = derive_stream(1000 + seed, 1, 0);
        let samples: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { -1.0 })
            .collect();
        total_err += (cpt_estimate(&samples, &params).unwrap() - exact).abs();
    }
    let mean_err = total_err / 10.0;
    let elapsed = start.elapsed();
    report(
        "1 (estimator consistency)",
        mean_err <= 0.01 && elapsed.as_secs_f64() < 5.0,
        &format!("mean |error| {mean_err:.5} over 10 seeds, runtime {elapsed:?}"),
    );
}

/// Two-agent toy game used by the reduction chain.
fn reduction_fixture() -> (GameSpec<f64>, PolicyTable<f64>, SigmaDistribution<f64>) {
    let spec = generate_experiment::<f64>(
        77,
        &ExperimentOverrides {
            n_agents: Some(2),
            n_states: Some(2),
            n_actions: Some(2),
            discount: Some(0.5),
            self_by_action: false,
        },
    );
    let mut policies: Vec<PolicyTable<f64>> = (0..2).map(|i| PolicyTable::new(i, 2, 2)).collect();
    let mut rng = derive_stream(78, 2, 0);
    for p in policies.iter_mut() {
        for t in p.theta_mut() {
            *t = rng.gen::<f64>() - 0.5;
        }
    }
    let sigma = exact_sigma_distribution(&spec, 0, &policies);
    (spec, policies.remove(0), sigma)
}

/// Criterion 2: with identity parameters every stage reduces to its
/// classical counterpart: sample mean, expected Bellman backup, discounted
/// visitation, and the classical policy gradient.
#[test]
fn acceptance_2_risk_neutral_reduction_chain() {
    let rn = CptParams::<f64>::risk_neutral();

    // (a) estimator = sample mean
    let mut rng = derive_stream(2000, 3, 0);
    let samples: Vec<f64> = (0..1000).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let est = cpt_estimate(&samples, &rn).unwrap();
    let err_a = (est - mean).abs();

    // (b) exact backup = expected Bellman backup
    let (spec, policy, sigma) = reduction_fixture();
    let values = ValueTable {
        agent: 0,
        values: vec![0.7, -0.3],
    };
    let mut err_b: f64 = 0.0;
    for s in 0..spec.n_states {
        let got = td_apply(s, &policy, &sigma, &values, &spec, &rn).unwrap();
        // direct expectation over the same product distribution
        let mut expected = 0.0;
        let probs = policy.probs(s);
        for (a, &pa) in probs.iter().enumerate() {
            for &(idx, ps) in &sigma.probs(s) {
                let sig = spec.sigma_support(0)[idx];
                let r = spec.reward(0, s, a, sig);
                for (next, &pn) in spec.cond_transition(0, s, a, idx).iter().enumerate() {
                    expected += pa * ps * pn * (r + spec.discount * values.values[next]);
                }
            }
        }
        err_b = err_b.max((got - expected).abs());
    }

    // (c) subjective visitation = classical discounted visitation
    // (independent linear solve)
    let dpr = subjective_transition(&spec, &policy, &sigma, &values, &rn).unwrap();
    let vis = solve_eta(&spec, &dpr).unwrap();
    let n = spec.n_states;
    let mut p_pi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        let probs = policy.probs(s);
        for (a, &pa) in probs.iter().enumerate() {
            for &(idx, ps) in &sigma.probs(s) {
                for (next, &pn) in spec.cond_transition(0, s, a, idx).iter().enumerate() {
                    p_pi[(s, next)] += pa * ps * pn;
                }
            }
        }
    }
    let a_mat = nalgebra::DMatrix::<f64>::identity(n, n) - spec.discount * p_pi.transpose();
    let p0 = nalgebra::DVector::from_vec(spec.initial_dist.clone());
    let eta_oracle = a_mat.lu().solve(&p0).unwrap();
    let err_c = (0..n)
        .map(|s| (vis.eta[s] - eta_oracle[s]).abs())
        .fold(0.0f64, f64::max);

    // (d) gradient = classical policy gradient at the exact fixed point
    let fp = solve_value_fixed_point(&spec, &policy, &sigma, &rn, 1e-14, 100_000).unwrap();
    let grad = grad_value(&policy, &fp.values, &spec, &sigma, &rn).unwrap();
    let mut q = vec![vec![0.0f64; spec.n_actions]; n];
    for s in 0..n {
        for a in 0..spec.n_actions {
            for &(idx, ps) in &sigma.probs(s) {
                let sig = spec.sigma_support(0)[idx];
                let mut inner = spec.reward(0, s, a, sig);
                for (next, &pn) in spec.cond_transition(0, s, a, idx).iter().enumerate() {
                    inner += spec.discount * pn * fp.values.values[next];
                }
                q[s][a] += ps * inner;
            }
        }
    }
    let eta_total: f64 = eta_oracle.iter().sum();
    let mut err_d: f64 = 0.0;
    for s in 0..n {
        for b in 0..spec.n_actions {
            let mut classical = 0.0;
            for a in 0..spec.n_actions {
                classical += policy.grad_pi(s, a)[b] * q[s][a];
            }
            classical *= eta_oracle[s] / eta_total;
            err_d = err_d.max((grad[s * spec.n_actions + b] - classical).abs());
        }
    }

    let pass = err_a <= 1e-12 && err_b <= 1e-12 && err_c <= 1e-9 && err_d <= 1e-9;
    report(
        "2 (risk-neutral reduction chain)",
        pass,
        &format!(
            "mean {err_a:.2e}, backup {err_b:.2e}, visitation {err_c:.2e}, gradient {err_d:.2e}"
        ),
    );
}

/// Criterion 3: the exact backup contracts empirically on the generated
/// benchmark game: ratio < 1 under the curved parameters and <= discount
/// under identity parameters.
#[test]
fn acceptance_3_contraction() {
    let spec = generate_experiment::<f64>(0, &ExperimentOverrides::default());
    let policies: Vec<PolicyTable<f64>> = (0..spec.n_agents)
        .map(|i| PolicyTable::new(i, spec.n_states, spec.n_actions))
        .collect();
    let mut rng = derive_stream(3000, 4, 0);
    let curved = check_contraction(&spec, &policies, &curved_params(), 100, &mut rng).unwrap();
    let neutral =
        check_contraction(&spec, &policies, &CptParams::risk_neutral(), 100, &mut rng).unwrap();
    let pass = curved.max_ratio < 1.0 && neutral.max_ratio <= spec.discount + 1e-9;
    report(
        "3 (empirical contraction)",
        pass,
        &format!(
            "subjective max ratio {:.4}, risk-neutral {:.6} vs discount {}",
            curved.max_ratio, neutral.max_ratio, spec.discount
        ),
    );
}

/// Criterion 4: on twenty random small games, the closed-form gradient
/// direction matches central finite differences of the exact fixed-point
/// value (cosine >= 0.999) within a minute.
#[test]
fn acceptance_4_gradient_vs_finite_differences() {
    let start = Instant::now();
    let params = curved_params();
    let mut worst_cosine = 1.0f64;
    for seed in 0..20u64 {
        let n_states = if seed % 2 == 0 { 2 } else { 3 };
        let spec = generate_experiment::<f64>(
            500 + seed,
            &ExperimentOverrides {
                n_agents: Some(2),
                n_states: Some(n_states),
                n_actions: Some(2),
                discount: Some(0.5),
                self_by_action: false,
            },
        );
        let mut policies: Vec<PolicyTable<f64>> = (0..2)
            .map(|i| PolicyTable::new(i, n_states, 2))
            .collect();
        let mut rng = derive_stream(600 + seed, 5, 0);
        for p in policies.iter_mut() {
            for t in p.theta_mut() {
                *t = rng.gen::<f64>() - 0.5;
            }
        }
        let sigma = exact_sigma_distribution(&spec, 0, &policies);
        let fp = solve_value_fixed_point(&spec, &policies[0], &sigma, &params, 1e-13, 200_000)
            .unwrap();
        assert!(fp.residual <= 1e-12, "fixed point stalled: {}", fp.residual);
        let grad = grad_value(&policies[0], &fp.values, &spec, &sigma, &params).unwrap();

        let objective = |p: &PolicyTable<f64>| -> f64 {
            let fp = solve_value_fixed_point(&spec, p, &sigma, &params, 1e-13, 200_000).unwrap();
            spec.initial_dist
                .iter()
                .zip(fp.values.values.iter())
                .map(|(&p0, &v)| p0 * v)
                .sum()
        };
        let h = 1e-5;
        let fd: Vec<f64> = (0..grad.len())
            .map(|k| {
                let mut hi = policies[0].clone();
                hi.theta_mut()[k] += h;
                let mut lo = policies[0].clone();
                lo.theta_mut()[k] -= h;
                (objective(&hi) - objective(&lo)) / (2.0 * h)
            })
            .collect();
        let dot: f64 = grad.iter().zip(fd.iter()).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cosine = dot / (norm(&grad) * norm(&fd));
        worst_cosine = worst_cosine.min(cosine);
    }
    let elapsed = start.elapsed();
    report(
        "4 (gradient vs finite differences)",
        worst_cosine >= 0.999 && elapsed.as_secs_f64() < 60.0,
        &format!("worst cosine {worst_cosine:.6} over 20 games, runtime {elapsed:?}"),
    );
}

/// The scenario sweep shared by criteria 5 and 6 (it is the expensive part).
fn scenario_sweep() -> &'static ScenarioSweep<f64> {
    static SWEEP: OnceLock<ScenarioSweep<f64>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let cfg = TrainerConfig::<f64>::scenario_default(0);
        run_scenarios(2024, 8, &cfg, &ExperimentOverrides::default()).unwrap()
    })
}

/// Criterion 5: across eight environment seeds, the first agent's
/// probability of the risk-free action weakly increases from the
/// risk-neutral scenario to loss aversion 2.6 to loss aversion 3.2 in at
/// least six seeds.
#[test]
fn acceptance_5_loss_aversion_ordering() {
    let sweep = scenario_sweep();
    let means: Vec<f64> = sweep
        .outcomes
        .iter()
        .map(|o| o.mean_action_probs[0][0])
        .collect();
    report(
        "5 (loss-aversion ordering)",
        sweep.ordering_satisfied >= 6,
        &format!(
            "ordering satisfied in {}/8 seeds; mean P(a=0) per scenario {:?}",
            sweep.ordering_satisfied,
            means
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        ),
    );
}

/// Criterion 6: the smoothed scenario-2 value trace of a fixed state
/// stabilizes: the final-window standard deviation is at most 10% of the
/// smoothed trace's total range, averaged over the eight runs.
#[test]
fn acceptance_6_value_trace_stabilizes() {
    let sweep = scenario_sweep();
    let traces = &sweep.tracked_traces[1]; // scenario 2
    let min_len = traces.iter().map(Vec::len).min().unwrap();
    let mean: Vec<f64> = (0..min_len)
        .map(|t| traces.iter().map(|tr| tr[t]).sum::<f64>() / traces.len() as f64)
        .collect();
    let window = 200usize;
    let smoothed: Vec<f64> = (0..min_len)
        .map(|t| {
            let from = t.saturating_sub(window - 1);
            let seg = &mean[from..=t];
            seg.iter().sum::<f64>() / seg.len() as f64
        })
        .collect();
    let hi = smoothed.iter().cloned().fold(f64::MIN, f64::max);
    let lo = smoothed.iter().cloned().fold(f64::MAX, f64::min);
    let range = hi - lo;
    let tail = &smoothed[min_len - window..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let tail_std = (tail
        .iter()
        .map(|v| (v - tail_mean) * (v - tail_mean))
        .sum::<f64>()
        / tail.len() as f64)
        .sqrt();
    report(
        "6 (value trace stabilizes)",
        tail_std <= 0.10 * range,
        &format!(
            "final-window std {tail_std:.4} vs 10% of range {:.4} (range {range:.3})",
            0.10 * range
        ),
    );
}

/// Criterion 7: identical seed and configuration produce byte-identical
/// metrics regardless of the worker count.
#[test]
fn acceptance_7_determinism_across_workers() {
    let spec = generate_experiment::<f64>(7, &ExperimentOverrides::default());
    let params: Vec<CptParams<f64>> = (0..spec.n_agents)
        .map(|_| curved_params())
        .collect();
    let mut cfg = TrainerConfig::<f64>::new(99);
    cfg.n_iters = 150;
    cfg.n_max = 16;
    cfg.workers = 1;
    let a = train(&spec, &params, &cfg).unwrap();
    cfg.workers = 4;
    let b = train(&spec, &params, &cfg).unwrap();
    let csv_a = metrics_csv(&a, spec.n_states);
    let csv_b = metrics_csv(&b, spec.n_states);
    report(
        "7 (determinism across workers)",
        csv_a == csv_b && a == b,
        &format!(
            "metrics CSV identical across 1 and 4 workers ({} bytes)",
            csv_a.len()
        ),
    );
}

/// Criterion 8: iterating the exact backup from zero converges to a fixed
/// point with sup-norm residual at most 1e-8 on the generated benchmark
/// game for every agent.
#[test]
fn acceptance_8_fixed_point() {
    let spec = generate_experiment::<f64>(0, &ExperimentOverrides::default());
    let policies: Vec<PolicyTable<f64>> = (0..spec.n_agents)
        .map(|i| PolicyTable::new(i, spec.n_states, spec.n_actions))
        .collect();
    let params = curved_params();
    let mut worst = 0.0f64;
    let mut sweeps = 0;
    for agent in 0..spec.n_agents {
        let sigma = exact_sigma_distribution(&spec, agent, &policies);
        let fp =
            solve_value_fixed_point(&spec, &policies[agent], &sigma, &params, 1e-8, 100_000)
                .unwrap();
        worst = worst.max(fp.residual);
        sweeps = sweeps.max(fp.sweeps);
    }
    report(
        "8 (fixed point)",
        worst <= 1e-8,
        &format!("worst residual {worst:.2e} over {} agents, max {sweeps} sweeps", spec.n_agents),
    );
}
