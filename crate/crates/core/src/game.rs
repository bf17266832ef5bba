//! Network aggregative Markov game: immutable game definition, simulation
//! primitives, and the randomized experiment generator.
//!
//! Each agent `i` observes the shared state plus a scalar aggregate of its
//! neighbors' actions, `sigma_i = sum_j w[i][j] * a_j`; its reward depends
//! only on `(state, own action, sigma_i)`. The transition kernel is stored
//! per (state, joint action). Exact per-agent computations additionally need
//! the kernel to depend on the joint action only through `(own action,
//! aggregate)`; that consistency is checked by [`GameSpec::validate`].

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{exp1_f64, normal_f64, sample_categorical};
use crate::scalar::{f, Float};

/// Aggregates closer than this are treated as the same achievable value.
/// Aggregates are short weighted sums of small integers, so distinct values
/// are separated by far more than this.
const SIGMA_TOL: f64 = 1e-9;

/// Per-agent reward coefficients: `R_i(s, a, sigma) = r_self + sigma * r_com * a`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel<F> {
    /// `[agent][state]` baseline reward, earned regardless of interaction.
    pub r_self: Vec<Vec<F>>,
    /// `[agent][state]` community coupling coefficient.
    pub r_com: Vec<Vec<F>>,
    /// Optional `[agent][state][action]` baseline, replacing `r_self` when
    /// present (sensitivity variant where the baseline depends on the own
    /// action as well).
    pub r_self_by_action: Option<Vec<Vec<Vec<F>>>>,
}

/// What one agent sees after an environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<F> {
    pub state: usize,
    pub own_action: usize,
    pub aggregate: F,
    pub reward: F,
    pub next_state: usize,
}

/// The game definition. Immutable after construction; cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<F> {
    pub n_agents: usize,
    pub n_states: usize,
    pub n_actions: usize,
    /// Row `i` holds the weights agent `i` places on each other agent;
    /// `w[i][i] = 0`.
    pub graph_weights: Vec<Vec<F>>,
    /// Stochastic tensor `[state][joint action][next state]`, flattened.
    /// Joint actions are encoded with agent 0 most significant:
    /// `index = sum_i a_i * n_actions^(n_agents - 1 - i)`.
    pub transition: Vec<F>,
    pub reward_model: RewardModel<F>,
    pub discount: F,
    pub initial_dist: Vec<F>,
    /// Bound on realizable rewards; [`GameSpec::reward`] clamps into
    /// `[-r_max, r_max]`.
    pub r_max: F,

    /// Sorted achievable aggregate values per agent.
    sigma_support: Vec<Vec<F>>,
    /// One representative joint action (own slot zeroed) per achievable
    /// aggregate, used to look up the aggregate-conditional kernel row.
    sigma_repr: Vec<Vec<Vec<usize>>>,
}

impl<F: Float> GameSpec<F> {
    /// Builds a spec from raw parts, deriving the aggregate caches and
    /// validating every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_agents: usize,
        n_states: usize,
        n_actions: usize,
        graph_weights: Vec<Vec<F>>,
        transition: Vec<F>,
        reward_model: RewardModel<F>,
        discount: F,
        initial_dist: Vec<F>,
        r_max: F,
    ) -> Result<Self> {
        let mut spec = Self {
            n_agents,
            n_states,
            n_actions,
            graph_weights,
            transition,
            reward_model,
            discount,
            initial_dist,
            r_max,
            sigma_support: Vec::new(),
            sigma_repr: Vec::new(),
        };
        spec.build_sigma_cache()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_joint_actions(&self) -> usize {
        self.n_actions.pow(self.n_agents as u32)
    }

    /// Encodes a joint action; agent 0 is the most significant digit.
    pub fn joint_index(&self, joint: &[usize]) -> usize {
        debug_assert_eq!(joint.len(), self.n_agents);
        joint.iter().fold(0, |acc, &a| {
            debug_assert!(a < self.n_actions);
            acc * self.n_actions + a
        })
    }

    /// Kernel row for `(state, joint action)`.
    pub fn transition_row(&self, state: usize, joint: &[usize]) -> &[F] {
        let j = self.joint_index(joint);
        let start = (state * self.n_joint_actions() + j) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Weighted sum of the other agents' actions as seen by `agent`.
    pub fn aggregate(&self, agent: usize, joint: &[usize]) -> F {
        let row = &self.graph_weights[agent];
        let mut acc = F::zero();
        for (j, &a) in joint.iter().enumerate() {
            if j != agent {
                acc += row[j] * f(a as f64);
            }
        }
        acc
    }

    /// Reward of `agent` for `(state, own action, aggregate)`, clamped into
    /// `[-r_max, r_max]`.
    pub fn reward(&self, agent: usize, state: usize, own_action: usize, aggregate: F) -> F {
        let base = match &self.reward_model.r_self_by_action {
            Some(sa) => sa[agent][state][own_action],
            None => self.reward_model.r_self[agent][state],
        };
        let r = base + aggregate * self.reward_model.r_com[agent][state] * f(own_action as f64);
        r.max(-self.r_max).min(self.r_max)
    }

    /// Achievable aggregate values for `agent`, sorted ascending.
    pub fn sigma_support(&self, agent: usize) -> &[F] {
        &self.sigma_support[agent]
    }

    /// Canonical index of an observed aggregate value.
    pub fn sigma_index(&self, agent: usize, value: F) -> Result<usize> {
        let support = &self.sigma_support[agent];
        let tol = f(SIGMA_TOL);
        // support is tiny; linear scan for the nearest value
        let mut best = None;
        let mut best_d = F::infinity();
        for (i, &s) in support.iter().enumerate() {
            let d = (s - value).abs();
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        match best {
            Some(i) if best_d <= tol => Ok(i),
            _ => Err(Error::UnknownAggregate {
                agent,
                value: value.to_f64_lossy(),
            }),
        }
    }

    /// Kernel row conditioned on `(state, own action, aggregate)` for one
    /// agent. Well-defined because validation checks the kernel depends on
    /// the joint action only through this pair.
    pub fn cond_transition(
        &self,
        agent: usize,
        state: usize,
        own_action: usize,
        sigma_idx: usize,
    ) -> &[F] {
        let mut joint = self.sigma_repr[agent][sigma_idx].clone();
        joint[agent] = own_action;
        let j = self.joint_index(&joint);
        let start = (state * self.n_joint_actions() + j) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Advances the environment one step: draws the successor state and
    /// returns every agent's observation of the round.
    pub fn step<R: Rng>(
        &self,
        state: usize,
        joint: &[usize],
        rng: &mut R,
    ) -> (usize, Vec<Observation<F>>) {
        let row = self.transition_row(state, joint);
        let next = sample_categorical(row, f::<F>(rng.gen::<f64>()));
        let obs = (0..self.n_agents)
            .map(|i| {
                let aggregate = self.aggregate(i, joint);
                Observation {
                    state,
                    own_action: joint[i],
                    aggregate,
                    reward: self.reward(i, state, joint[i], aggregate),
                    next_state: next,
                }
            })
            .collect();
        (next, obs)
    }

    fn build_sigma_cache(&mut self) -> Result<()> {
        let n = self.n_agents;
        if self.n_actions == 0 || n == 0 {
            return Err(Error::InvalidParameter {
                field: "n_agents/n_actions".into(),
                reason: "must be positive".into(),
            });
        }
        let combos = (self.n_actions as u128).pow(n as u32);
        if combos > 1_000_000 {
            return Err(Error::InvalidParameter {
                field: "n_actions^n_agents".into(),
                reason: format!("joint action space too large ({combos})"),
            });
        }
        let tol = f::<F>(SIGMA_TOL);
        self.sigma_support = Vec::with_capacity(n);
        self.sigma_repr = Vec::with_capacity(n);
        for agent in 0..n {
            let mut values: Vec<(F, Vec<usize>)> = Vec::new();
            let mut joint = vec![0usize; n];
            loop {
                let sigma = self.aggregate(agent, &joint);
                if !values.iter().any(|&(v, _)| (v - sigma).abs() <= tol) {
                    let mut repr = joint.clone();
                    repr[agent] = 0;
                    values.push((sigma, repr));
                }
                // odometer over the other agents' slots
                let mut done = true;
                for slot in (0..n).rev() {
                    if slot == agent {
                        continue;
                    }
                    joint[slot] += 1;
                    if joint[slot] < self.n_actions {
                        done = false;
                        break;
                    }
                    joint[slot] = 0;
                }
                if done {
                    break;
                }
            }
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite aggregates"));
            self.sigma_support
                .push(values.iter().map(|&(v, _)| v).collect());
            self.sigma_repr
                .push(values.into_iter().map(|(_, r)| r).collect());
        }
        Ok(())
    }

    /// Checks every structural invariant; called by the constructors.
    pub fn validate(&self) -> Result<()> {
        let invalid = |field: &str, reason: String| Error::InvalidParameter {
            field: field.into(),
            reason,
        };
        if !(self.discount >= F::zero() && self.discount < F::one()) {
            return Err(invalid("discount", format!("must be in [0, 1), got {}", self.discount)));
        }
        if self.graph_weights.len() != self.n_agents
            || self.graph_weights.iter().any(|r| r.len() != self.n_agents)
        {
            return Err(invalid("graph_weights", "shape mismatch".into()));
        }
        for (i, row) in self.graph_weights.iter().enumerate() {
            if row[i] != F::zero() {
                return Err(invalid(
                    "graph_weights",
                    format!("w[{i}][{i}] must be 0 (an agent is not its own neighbor)"),
                ));
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(invalid("graph_weights", "non-finite weight".into()));
            }
        }
        let expected = self.n_states * self.n_joint_actions() * self.n_states;
        if self.transition.len() != expected {
            return Err(invalid(
                "transition",
                format!("expected {expected} entries, got {}", self.transition.len()),
            ));
        }
        let tol = f::<F>(1e-12);
        for s in 0..self.n_states {
            for j in 0..self.n_joint_actions() {
                let start = (s * self.n_joint_actions() + j) * self.n_states;
                let row = &self.transition[start..start + self.n_states];
                let mut total = F::zero();
                for &p in row {
                    if !(p >= F::zero()) {
                        return Err(invalid(
                            "transition",
                            format!("negative probability at state {s}, joint {j}"),
                        ));
                    }
                    total += p;
                }
                if (total - F::one()).abs() > tol {
                    return Err(invalid(
                        "transition",
                        format!("row (state {s}, joint {j}) sums to {total}"),
                    ));
                }
            }
        }
        if self.initial_dist.len() != self.n_states {
            return Err(invalid("initial_dist", "length mismatch".into()));
        }
        let mut total = F::zero();
        for &p in &self.initial_dist {
            if !(p >= F::zero()) {
                return Err(invalid("initial_dist", "negative probability".into()));
            }
            total += p;
        }
        if (total - F::one()).abs() > tol {
            return Err(invalid("initial_dist", format!("sums to {total}")));
        }
        let rm = &self.reward_model;
        let shape_ok = rm.r_self.len() == self.n_agents
            && rm.r_self.iter().all(|r| r.len() == self.n_states)
            && rm.r_com.len() == self.n_agents
            && rm.r_com.iter().all(|r| r.len() == self.n_states)
            && rm.r_self_by_action.as_ref().is_none_or(|sa| {
                sa.len() == self.n_agents
                    && sa.iter().all(|a| {
                        a.len() == self.n_states
                            && a.iter().all(|s| s.len() == self.n_actions)
                    })
            });
        if !shape_ok {
            return Err(invalid("reward_model", "shape mismatch".into()));
        }
        let all_finite = rm.r_self.iter().flatten().all(|v| v.is_finite())
            && rm.r_com.iter().flatten().all(|v| v.is_finite())
            && rm
                .r_self_by_action
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("reward_model", "non-finite coefficient".into()));
        }

        // realizable rewards stay within the stated bound
        let bound = self.r_max + f(1e-9);
        for agent in 0..self.n_agents {
            for state in 0..self.n_states {
                for action in 0..self.n_actions {
                    for &sigma in self.sigma_support(agent) {
                        let base = match &rm.r_self_by_action {
                            Some(sa) => sa[agent][state][action],
                            None => rm.r_self[agent][state],
                        };
                        let r = base + sigma * rm.r_com[agent][state] * f(action as f64);
                        if r.abs() > bound {
                            return Err(invalid(
                                "r_max",
                                format!(
                                    "reward {r} for agent {agent} exceeds bound {}",
                                    self.r_max
                                ),
                            ));
                        }
                    }
                }
            }
        }

        self.validate_aggregate_consistency()
    }

    /// Exact per-agent computations condition the kernel on `(own action,
    /// aggregate)`; the kernel must therefore not distinguish joint actions
    /// that an agent cannot tell apart.
    fn validate_aggregate_consistency(&self) -> Result<()> {
        let tol = f::<F>(1e-11);
        let n = self.n_agents;
        for agent in 0..n {
            for state in 0..self.n_states {
                for own in 0..self.n_actions {
                    let mut joint = vec![0usize; n];
                    joint[agent] = own;
                    loop {
                        let sigma = self.aggregate(agent, &joint);
                        let idx = self.sigma_index(agent, sigma)?;
                        let reference = self.cond_transition(agent, state, own, idx);
                        let row = self.transition_row(state, &joint);
                        for (a, b) in reference.iter().zip(row.iter()) {
                            if (*a - *b).abs() > tol {
                                return Err(Error::InvalidParameter {
                                    field: "transition".into(),
                                    reason: format!(
                                        "kernel row at state {state} differs across joint \
                                         actions with identical (own action {own}, aggregate) \
                                         for agent {agent}"
                                    ),
                                });
                            }
                        }
                        let mut done = true;
                        for slot in (0..n).rev() {
                            if slot == agent {
                                continue;
                            }
                            joint[slot] += 1;
                            if joint[slot] < self.n_actions {
                                done = false;
                                break;
                            }
                            joint[slot] = 0;
                        }
                        if done {
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Overrides for [`generate_experiment`]; `None` keeps the default layout
/// (four agents, five states, three actions, complete graph, discount 0.3).
#[derive(Debug, Clone, Default)]
pub struct ExperimentOverrides {
    pub n_agents: Option<usize>,
    pub n_states: Option<usize>,
    pub n_actions: Option<usize>,
    pub discount: Option<f64>,
    /// Draw the baseline reward per (state, action) instead of per state.
    pub self_by_action: bool,
}

/// Generates the randomized benchmark game: complete graph with uniform
/// weights `1/(N-1)`, baseline rewards `Normal(0.5, 0.1)`, community
/// coefficients `5 * Uniform[-0.5, 0.5]`, and a random ergodic kernel.
///
/// Kernel rows are Dirichlet(1, ..., 1) draws (normalized unit exponentials),
/// one row per (state, total action sum). Tying rows to the action sum keeps
/// the kernel a function the agents can evaluate from their own action and
/// aggregate, which the exact critic and gradient computations require.
/// Deterministic in `seed`; the draw order is fixed (baseline rewards, then
/// community coefficients, then kernel rows, agent/state-major).
///
/// The default discount of 0.3 keeps the converged one-step prospects
/// `R + discount * V` straddling the reference point; under heavier
/// discounting the accumulated values push every prospect into a single
/// sign domain, where diminishing sensitivity rather than loss aversion
/// drives the policies.
pub fn generate_experiment<F: Float>(seed: u64, overrides: &ExperimentOverrides) -> GameSpec<F> {
    let n_agents = overrides.n_agents.unwrap_or(4);
    let n_states = overrides.n_states.unwrap_or(5);
    let n_actions = overrides.n_actions.unwrap_or(3);
    let discount = overrides.discount.unwrap_or(0.3);
    assert!(n_agents >= 2, "need at least two agents");

    let mut rng = crate::rng::derive_stream(seed, 0x6A4E, 0);

    let mut r_self = vec![vec![F::zero(); n_states]; n_agents];
    let mut r_self_sa = if overrides.self_by_action {
        Some(vec![vec![vec![F::zero(); n_actions]; n_states]; n_agents])
    } else {
        None
    };
    for agent in 0..n_agents {
        for state in 0..n_states {
            if let Some(sa) = r_self_sa.as_mut() {
                for action in 0..n_actions {
                    sa[agent][state][action] = f(normal_f64(&mut rng, 0.5, 0.1));
                }
            } else {
                r_self[agent][state] = f(normal_f64(&mut rng, 0.5, 0.1));
            }
        }
    }
    let mut r_com = vec![vec![F::zero(); n_states]; n_agents];
    for row in r_com.iter_mut() {
        for v in row.iter_mut() {
            *v = f(5.0 * (rng.gen::<f64>() - 0.5));
        }
    }

    // one Dirichlet row per (state, action sum), replicated over the joint
    // actions sharing that sum
    let max_sum = n_agents * (n_actions - 1);
    let mut sum_rows = vec![vec![F::zero(); n_states]; n_states * (max_sum + 1)];
    for row in sum_rows.iter_mut() {
        let draws: Vec<f64> = (0..n_states).map(|_| exp1_f64(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        for (slot, d) in row.iter_mut().zip(draws) {
            *slot = f(d / total);
        }
    }
    let n_joint = n_actions.pow(n_agents as u32);
    let mut transition = vec![F::zero(); n_states * n_joint * n_states];
    for state in 0..n_states {
        for j in 0..n_joint {
            let mut rest = j;
            let mut sum = 0usize;
            for _ in 0..n_agents {
                sum += rest % n_actions;
                rest /= n_actions;
            }
            let row = &sum_rows[state * (max_sum + 1) + sum];
            let start = (state * n_joint + j) * n_states;
            transition[start..start + n_states].copy_from_slice(row);
        }
    }

    let w = 1.0 / (n_agents as f64 - 1.0);
    let graph_weights = (0..n_agents)
        .map(|i| {
            (0..n_agents)
                .map(|j| if i == j { F::zero() } else { f(w) })
                .collect()
        })
        .collect();

    // uniform initial distribution; the last entry absorbs rounding drift
    let mut initial_dist = vec![f::<F>(1.0 / n_states as f64); n_states];
    let head = initial_dist
        .iter()
        .take(n_states - 1)
        .fold(F::zero(), |a, &b| a + b);
    initial_dist[n_states - 1] = F::one() - head;

    let max_abs = |it: &mut dyn Iterator<Item = F>| it.fold(F::zero(), |a, v| a.max(v.abs()));
    let self_max = match &r_self_sa {
        Some(sa) => max_abs(&mut sa.iter().flatten().flatten().copied()),
        None => max_abs(&mut r_self.iter().flatten().copied()),
    };
    let com_max = max_abs(&mut r_com.iter().flatten().copied());
    let a_max = f::<F>((n_actions - 1) as f64);
    // every row of the uniform complete graph sums to 1
    let sigma_max = a_max;
    let r_max = self_max + com_max * sigma_max * a_max;

    GameSpec::from_parts(
        n_agents,
        n_states,
        n_actions,
        graph_weights,
        transition,
        RewardModel {
            r_self,
            r_com,
            r_self_by_action: r_self_sa,
        },
        f(discount),
        initial_dist,
        r_max,
    )
    .expect("generated spec must validate")
}

/// Environment stand-in used for bootstrapping value estimates: draws
/// `(reward, next state)` conditioned on `(state, own action, aggregate)`
/// without exposing anything else about the game to the agent.
pub struct Simulator<'a, F> {
    spec: &'a GameSpec<F>,
    agent: usize,
}

impl<'a, F: Float> Simulator<'a, F> {
    pub fn new(spec: &'a GameSpec<F>, agent: usize) -> Self {
        Self { spec, agent }
    }

    pub fn sample<R: Rng>(
        &self,
        state: usize,
        own_action: usize,
        sigma_idx: usize,
        rng: &mut R,
    ) -> (F, usize) {
        let sigma = self.spec.sigma_support(self.agent)[sigma_idx];
        let reward = self.spec.reward(self.agent, state, own_action, sigma);
        let row = self
            .spec
            .cond_transition(self.agent, state, own_action, sigma_idx);
        let next = sample_categorical(row, f::<F>(rng.gen::<f64>()));
        (reward, next)
    }
}

// ---------------------------------------------------------------------------
// file format
// ---------------------------------------------------------------------------

/// Serialized mirror of [`GameSpec`] (always `f64` on disk).
#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    n_agents: usize,
    n_states: usize,
    n_actions: usize,
    discount: f64,
    r_max: f64,
    initial_dist: Vec<f64>,
    graph_weights: Vec<Vec<f64>>,
    r_self: Vec<Vec<f64>>,
    r_com: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_self_by_action: Option<Vec<Vec<Vec<f64>>>>,
    /// `[state][joint action][next state]` with agent 0 most significant in
    /// the joint index.
    transition: Vec<Vec<Vec<f64>>>,
}

impl<F: Float> GameSpec<F> {
    pub fn to_toml_string(&self) -> String {
        let n_joint = self.n_joint_actions();
        let wide = |m: &Vec<Vec<F>>| {
            m.iter()
                .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                .collect()
        };
        let file = GameFile {
            n_agents: self.n_agents,
            n_states: self.n_states,
            n_actions: self.n_actions,
            discount: self.discount.to_f64_lossy(),
            r_max: self.r_max.to_f64_lossy(),
            initial_dist: self.initial_dist.iter().map(|v| v.to_f64_lossy()).collect(),
            graph_weights: wide(&self.graph_weights),
            r_self: wide(&self.reward_model.r_self),
            r_com: wide(&self.reward_model.r_com),
            r_self_by_action: self.reward_model.r_self_by_action.as_ref().map(|sa| {
                sa.iter()
                    .map(|per_state| {
                        per_state
                            .iter()
                            .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                            .collect()
                    })
                    .collect()
            }),
            transition: (0..self.n_states)
                .map(|s| {
                    (0..n_joint)
                        .map(|j| {
                            let start = (s * n_joint + j) * self.n_states;
                            self.transition[start..start + self.n_states]
                                .iter()
                                .map(|v| v.to_f64_lossy())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        };
        toml::to_string(&file).expect("game serialization cannot fail")
    }

    pub fn from_toml_string(text: &str, origin: &str) -> Result<Self> {
        let file: GameFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            reason: e.to_string(),
        })?;
        let narrow =
            |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect();
        let mut transition = Vec::new();
        for per_state in &file.transition {
            for row in per_state {
                transition.extend(row.iter().map(|&v| f::<F>(v)));
            }
        }
        GameSpec::from_parts(
            file.n_agents,
            file.n_states,
            file.n_actions,
            narrow(&file.graph_weights),
            transition,
            RewardModel {
                r_self: narrow(&file.r_self),
                r_com: narrow(&file.r_com),
                r_self_by_action: file.r_self_by_action.as_ref().map(|sa| {
                    sa.iter()
                        .map(|per_state| {
                            per_state
                                .iter()
                                .map(|r| r.iter().map(|&v| f(v)).collect())
                                .collect()
                        })
                        .collect()
                }),
            },
            f(file.discount),
            file.initial_dist.iter().map(|&v| f(v)).collect(),
            f(file.r_max),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_string(&text, &path.display().to_string())
    }
}
