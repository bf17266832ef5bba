//! Nested CPT policy evaluation: exact one-step backup over the enumerated
//! outcome distribution, the sampled estimator used during training, the
//! tabular critic update, and the empirical contraction check.

use rand::Rng;

use crate::actor::{PolicyTable, SigmaDistribution};
use crate::cpt::{self, CptParams};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Simulator};
use crate::scalar::{f, Float};
use crate::trainer::ExperienceStore;

/// Per-state values of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<F> {
    pub agent: usize,
    pub values: Vec<F>,
}

impl<F: Float> ValueTable<F> {
    pub fn zeros(agent: usize, n_states: usize) -> Self {
        Self {
            agent,
            values: vec![F::zero(); n_states],
        }
    }

    pub fn get(&self, state: usize) -> F {
        self.values[state]
    }

    /// Loose sanity bound `c * r_max * max(1, lambda) / (1 - discount)` with
    /// `c = 4`; converged tables stay far inside it.
    pub fn sanity_bound(spec: &GameSpec<F>, params: &CptParams<F>) -> F {
        f::<F>(4.0) * spec.r_max * params.lambda.max(F::one()) / (F::one() - spec.discount)
    }
}

/// Where outcome rewards come from: the game's true reward model, or the
/// agent's per-key experience means (the privacy-preserving route; rewards
/// are deterministic per key, so one observation pins the mean).
#[derive(Clone, Copy)]
pub enum RewardSource<'a, F> {
    Model,
    Store(&'a ExperienceStore<F>),
}

/// Joint outcome distribution of one step from a state: own action x
/// aggregate x successor, with `value = R + discount * V(successor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet<F> {
    pub entries: Vec<OutcomeEntry<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeEntry<F> {
    pub own_action: usize,
    pub sigma_idx: usize,
    pub aggregate: F,
    pub next_state: usize,
    pub probability: F,
    pub value: F,
}

impl<F: Float> OutcomeSet<F> {
    pub fn total_probability(&self) -> F {
        self.entries
            .iter()
            .fold(F::zero(), |acc, e| acc + e.probability)
    }

    pub(crate) fn values(&self) -> Vec<F> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub(crate) fn probabilities(&self) -> Vec<F> {
        self.entries.iter().map(|e| e.probability).collect()
    }
}

/// Enumerates the product distribution `pi(a|s) x P(sigma|s) x P(s'|s,a,sigma)`
/// with the true reward model.
pub fn enumerate_outcomes<F: Float>(
    state: usize,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
) -> Result<OutcomeSet<F>> {
    enumerate_outcomes_with(state, policy, sigma_dist, values, spec, RewardSource::Model)
}

/// [`enumerate_outcomes`] with a caller-chosen reward source.
pub fn enumerate_outcomes_with<F: Float>(
    state: usize,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
    rewards: RewardSource<'_, F>,
) -> Result<OutcomeSet<F>> {
    let agent = policy.agent;
    let sigma_probs = sigma_dist.probs(state);
    if sigma_probs.is_empty() {
        return Err(Error::EmptySigmaSupport { agent, state });
    }
    let action_probs = policy.probs(state);
    let mut entries = Vec::new();
    for (action, &pa) in action_probs.iter().enumerate() {
        if pa <= F::zero() {
            continue;
        }
        for &(sigma_idx, ps) in &sigma_probs {
            let aggregate = spec.sigma_support(agent)[sigma_idx];
            let r = match rewards {
                RewardSource::Model => spec.reward(agent, state, action, aggregate),
                RewardSource::Store(store) => store
                    .mean_reward(state, action, sigma_idx)
                    .ok_or(Error::MissingExperience {
                        state,
                        action,
                        sigma_idx,
                    })?,
            };
            let row = spec.cond_transition(agent, state, action, sigma_idx);
            for (next, &pn) in row.iter().enumerate() {
                if pn <= F::zero() {
                    continue;
                }
                entries.push(OutcomeEntry {
                    own_action: action,
                    sigma_idx,
                    aggregate,
                    next_state: next,
                    probability: pa * ps * pn,
                    value: r + spec.discount * values.get(next),
                });
            }
        }
    }
    let set = OutcomeSet { entries };
    debug_assert!(
        (set.total_probability() - F::one()).abs() <= f(1e-10),
        "outcome probabilities must form a distribution"
    );
    Ok(set)
}

/// One application of the nested CPT backup at a state: the CPT value of the
/// enumerated `(R + discount * V(s'))` distribution.
pub fn td_apply<F: Float>(
    state: usize,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
    params: &CptParams<F>,
) -> Result<F> {
    let outcomes = enumerate_outcomes(state, policy, sigma_dist, values, spec)?;
    Ok(cpt::cpt_value_of_pairs(
        &outcomes.values(),
        &outcomes.probabilities(),
        params,
    ))
}

/// Sampled counterpart of [`td_apply`] used inside the training loop.
///
/// Draws `n_max` outcome samples: own action from the current policy, an
/// aggregate from the empirical per-state aggregate distribution, then
/// `(reward, next state)` from the experience store when the key already
/// holds at least `store_threshold` samples, falling back to the simulator
/// (and pushing the simulator draw into the store for later reuse).
#[allow(clippy::too_many_arguments)]
pub fn sampled_value_estimate<F: Float, R: Rng>(
    state: usize,
    policy: &PolicyTable<F>,
    store: &mut ExperienceStore<F>,
    simulator: &Simulator<'_, F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
    params: &CptParams<F>,
    n_max: usize,
    store_threshold: usize,
    rng: &mut R,
) -> Result<F> {
    assert!(n_max >= 1, "need at least one sample");
    let agent = policy.agent;
    let sigma_probs = sigma_dist.probs(state);
    if sigma_probs.is_empty() {
        return Err(Error::EmptySigmaSupport { agent, state });
    }
    let mut samples = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let action = policy.sample_action(state, rng);
        let pick: F = crate::rng::uniform(rng);
        let mut acc = F::zero();
        let mut sigma_idx = sigma_probs[sigma_probs.len() - 1].0;
        for &(idx, p) in &sigma_probs {
            acc += p;
            if pick < acc {
                sigma_idx = idx;
                break;
            }
        }
        let (r, next) = if store.len(state, action, sigma_idx) >= store_threshold {
            store.sample(state, action, sigma_idx, rng)
        } else {
            let drawn = simulator.sample(state, action, sigma_idx, rng);
            store.push(state, action, sigma_idx, drawn.0, drawn.1);
            drawn
        };
        samples.push(r + spec.discount * values.get(next));
    }
    cpt::cpt_estimate(&samples, params)
}

/// Tabular critic update; returns the TD error.
pub fn critic_step<F: Float>(
    values: &mut ValueTable<F>,
    state: usize,
    estimate: F,
    lr_cr: F,
) -> F {
    debug_assert!(lr_cr > F::zero() && lr_cr <= F::one());
    let td_error = estimate - values.values[state];
    values.values[state] += lr_cr * td_error;
    td_error
}

/// Result of iterating the exact backup to its fixed point.
#[derive(Debug, Clone)]
pub struct FixedPoint<F> {
    pub values: ValueTable<F>,
    pub sweeps: usize,
    /// Final sup-norm residual `max_s |T V(s) - V(s)|`.
    pub residual: F,
}

/// Iterates synchronous sweeps of [`td_apply`] from `V = 0` until the
/// sup-norm residual drops below `tol` (or `max_sweeps` is hit).
pub fn solve_value_fixed_point<F: Float>(
    spec: &GameSpec<F>,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    params: &CptParams<F>,
    tol: F,
    max_sweeps: usize,
) -> Result<FixedPoint<F>> {
    let mut current = ValueTable::zeros(policy.agent, spec.n_states);
    let mut residual = F::infinity();
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let mut next = current.clone();
        let mut worst = F::zero();
        for s in 0..spec.n_states {
            let backed = td_apply(s, policy, sigma_dist, &current, spec, params)?;
            worst = worst.max((backed - current.values[s]).abs());
            next.values[s] = backed;
        }
        current = next;
        residual = worst;
        sweeps += 1;
        if residual <= tol {
            break;
        }
    }
    Ok(FixedPoint {
        values: current,
        sweeps,
        residual,
    })
}

/// Scale of reachable values under the nested backup, from the self-consistent
/// bound `b = max(u_gain(r_max + g b), lambda * (r_max + g b)^beta)`.
pub fn value_bound<F: Float>(spec: &GameSpec<F>, params: &CptParams<F>) -> F {
    let mut b = F::zero();
    for _ in 0..64 {
        let reach = spec.r_max + spec.discount * b;
        let gain = cpt::utility(reach + params.x0, params);
        let loss = cpt::utility(-reach + params.x0, params).abs();
        b = gain.max(loss);
    }
    b
}

/// Empirical contraction report for the exact backup.
#[derive(Debug, Clone)]
pub struct ContractionReport<F> {
    /// Max over sampled pairs (and agents) of
    /// `||T V - T Vbar||_inf / ||V - Vbar||_inf`.
    pub max_ratio: F,
    pub n_pairs: usize,
}

/// Samples random value-table pairs and measures the sup-norm ratio of the
/// backup applied to each, for every agent under its true aggregate
/// distribution induced by `policies`. Pairs with `V = Vbar` are skipped.
pub fn check_contraction<F: Float, R: Rng>(
    spec: &GameSpec<F>,
    policies: &[PolicyTable<F>],
    params: &CptParams<F>,
    n_pairs: usize,
    rng: &mut R,
) -> Result<ContractionReport<F>> {
    assert!(n_pairs >= 1);
    let bound = value_bound(spec, params).max(f(1.0));
    let sigma_dists: Vec<SigmaDistribution<F>> = (0..spec.n_agents)
        .map(|agent| crate::actor::exact_sigma_distribution(spec, agent, policies))
        .collect();
    let mut max_ratio = F::zero();
    for _ in 0..n_pairs {
        for agent in 0..spec.n_agents {
            let draw = |rng: &mut R| -> Vec<F> {
                (0..spec.n_states)
                    .map(|_| (crate::rng::uniform::<F, _>(rng) * f(2.0) - F::one()) * bound)
                    .collect()
            };
            let va = ValueTable {
                agent,
                values: draw(rng),
            };
            let vb = ValueTable {
                agent,
                values: draw(rng),
            };
            let mut gap = F::zero();
            for s in 0..spec.n_states {
                gap = gap.max((va.values[s] - vb.values[s]).abs());
            }
            if gap == F::zero() {
                continue; // identical pair carries no information
            }
            let mut backed_gap = F::zero();
            for s in 0..spec.n_states {
                let ta = td_apply(s, &policies[agent], &sigma_dists[agent], &va, spec, params)?;
                let tb = td_apply(s, &policies[agent], &sigma_dists[agent], &vb, spec, params)?;
                backed_gap = backed_gap.max((ta - tb).abs());
            }
            max_ratio = max_ratio.max(backed_gap / gap);
        }
    }
    Ok(ContractionReport { max_ratio, n_pairs })
}
