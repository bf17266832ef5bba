//! Softmax tabular policies, the subjective (distorted) visitation measure,
//! and the nested CPT policy gradient.
//!
//! The gradient of the nested value at the start distribution splits into a
//! visitation part and a local part. Differentiating the one-step backup
//! `T V(s) = sum_k phi_k(q) u(z_k)` in `V` gives the subjective one-step
//! kernel `DPr(s, s') = sum_{k -> s'} phi_k * discount * u'(z_k)`; its
//! geometric series is the subjective time measure `eta` solving
//! `(I - DPr^T) eta = p0`. Differentiating in the policy parameters gives the
//! local term `g(s) = sum_k u(z_k) grad_theta phi_k(q)`, which this module
//! evaluates in closed form from the rank structure of the outcome set. The
//! returned gradient is `sum_s mu(s) g(s)` with `mu = eta / sum(eta)`, i.e.
//! the true gradient up to the positive factor `sum(eta)`.

use crate::cpt::{self, CptParams};
use crate::critic::{enumerate_outcomes_with, OutcomeSet, RewardSource, ValueTable};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::linalg;
use crate::scalar::{f, Float};
use rand::Rng;

/// Default cap on the utility derivative near the reference point, where the
/// power utilities have unbounded slope.
pub const DEFAULT_U_PRIME_CAP: f64 = 1e3;

/// How the derivative of the cumulative weighting enters the local gradient
/// term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientWeighting {
    /// Total derivative of every decision weight in the rank-dependent
    /// scheme (cross-outcome terms included). Reduces to the classical
    /// policy gradient under identity parameters and matches finite
    /// differences of the exact fixed point.
    #[default]
    Exact,
    /// Keeps only each outcome's own-weight derivative
    /// `w'(cumulative including the outcome)`.
    Diagonal,
    /// Builds the coefficient by rank differencing of `w'` itself, treating
    /// `w'` as a weighting function in its own right.
    Differenced,
}

/// Tabular softmax policy of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable<F> {
    pub agent: usize,
    n_states: usize,
    n_actions: usize,
    theta: Vec<F>,
}

impl<F: Float> PolicyTable<F> {
    /// All-zero parameters, i.e. uniform policies everywhere.
    pub fn new(agent: usize, n_states: usize, n_actions: usize) -> Self {
        Self {
            agent,
            n_states,
            n_actions,
            theta: vec![F::zero(); n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn theta(&self) -> &[F] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [F] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, state: usize, row: &[F]) {
        self.theta[state * self.n_actions..(state + 1) * self.n_actions].copy_from_slice(row);
    }

    /// Action distribution at a state: softmax over the state's row.
    pub fn probs(&self, state: usize) -> Vec<F> {
        let row = &self.theta[state * self.n_actions..(state + 1) * self.n_actions];
        let m = row.iter().fold(F::neg_infinity(), |a, &b| a.max(b));
        let mut out: Vec<F> = row.iter().map(|&t| (t - m).exp()).collect();
        let total = out.iter().fold(F::zero(), |a, &b| a + b);
        for v in out.iter_mut() {
            *v /= total;
        }
        out
    }

    /// Gradient of `pi(action | state)` in the state's parameter row:
    /// `pi_a (e_a - pi)`. Parameters of other states do not appear.
    pub fn grad_pi(&self, state: usize, action: usize) -> Vec<F> {
        let probs = self.probs(state);
        let pa = probs[action];
        probs
            .iter()
            .enumerate()
            .map(|(b, &pb)| if b == action { pa * (F::one() - pb) } else { -pa * pb })
            .collect()
    }

    pub fn sample_action<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        let probs = self.probs(state);
        crate::rng::sample_categorical(&probs, crate::rng::uniform(rng))
    }
}

/// Ascent step on the policy parameters.
pub fn actor_step<F: Float>(policy: &mut PolicyTable<F>, grad: &[F], lr_ac: F) {
    debug_assert!(lr_ac >= F::zero());
    debug_assert_eq!(grad.len(), policy.theta.len());
    for (t, &g) in policy.theta.iter_mut().zip(grad.iter()) {
        *t += lr_ac * g;
    }
}

/// Per-state distribution of the aggregate an agent observes.
///
/// Aggregates are kept as indices into the game's canonical per-agent support
/// (observed values snap to the nearest achievable value), so binning is
/// exact. Holds either empirical observation counts or exact probabilities
/// (see [`exact_sigma_distribution`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDistribution<F> {
    pub agent: usize,
    support: Vec<F>,
    /// `[state][sigma index]` non-negative mass (counts, when empirical).
    weights: Vec<Vec<F>>,
    /// Per-state observation counts (zero for exact distributions).
    observations: Vec<u64>,
}

impl<F: Float> SigmaDistribution<F> {
    pub fn new(spec: &GameSpec<F>, agent: usize) -> Self {
        Self {
            agent,
            support: spec.sigma_support(agent).to_vec(),
            weights: vec![vec![F::zero(); spec.sigma_support(agent).len()]; spec.n_states],
            observations: vec![0; spec.n_states],
        }
    }

    pub fn support(&self) -> &[F] {
        &self.support
    }

    pub fn observations(&self, state: usize) -> u64 {
        self.observations[state]
    }

    /// Records one observed aggregate by canonical index.
    pub fn observe(&mut self, state: usize, sigma_idx: usize) {
        self.weights[state][sigma_idx] += F::one();
        self.observations[state] += 1;
    }

    /// Records one observed aggregate by value, snapping it to the support.
    pub fn observe_value(&mut self, spec: &GameSpec<F>, state: usize, value: F) -> Result<()> {
        let idx = spec.sigma_index(self.agent, value)?;
        self.observe(state, idx);
        Ok(())
    }

    /// Normalized `(sigma index, probability)` pairs with positive mass.
    pub fn probs(&self, state: usize) -> Vec<(usize, F)> {
        let total = self.weights[state]
            .iter()
            .fold(F::zero(), |a, &b| a + b);
        if total <= F::zero() {
            return Vec::new();
        }
        self.weights[state]
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > F::zero())
            .map(|(i, &w)| (i, w / total))
            .collect()
    }

    /// True at states with at least some mass recorded.
    pub fn is_supported(&self, state: usize) -> bool {
        self.weights[state].iter().any(|&w| w > F::zero())
    }
}

/// Exact aggregate distribution induced by the other agents' policies: the
/// product distribution of their action draws, grouped by aggregate value.
pub fn exact_sigma_distribution<F: Float>(
    spec: &GameSpec<F>,
    agent: usize,
    policies: &[PolicyTable<F>],
) -> SigmaDistribution<F> {
    let mut dist = SigmaDistribution::new(spec, agent);
    let n = spec.n_agents;
    for state in 0..spec.n_states {
        let probs: Vec<Vec<F>> = (0..n).map(|j| policies[j].probs(state)).collect();
        let mut joint = vec![0usize; n];
        loop {
            let mut p = F::one();
            for j in 0..n {
                if j != agent {
                    p *= probs[j][joint[j]];
                }
            }
            let sigma = spec.aggregate(agent, &joint);
            let idx = spec
                .sigma_index(agent, sigma)
                .expect("enumerated aggregate is always in the support");
            dist.weights[state][idx] += p;

            let mut done = true;
            for slot in (0..n).rev() {
                if slot == agent {
                    continue;
                }
                joint[slot] += 1;
                if joint[slot] < spec.n_actions {
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
    dist
}

/// Subjective time measure over states and its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectiveVisitation<F> {
    /// Unnormalized measure solving `(I - DPr^T) eta = p0`.
    pub eta: Vec<F>,
    /// `eta / sum(eta)`, a probability distribution.
    pub mu: Vec<F>,
}

/// Subjective one-step visitation kernel `DPr[from][to]` under the current
/// policy, aggregate distribution, and value table:
/// each outcome contributes `phi * discount * u'(R + discount V(s'))` to its
/// destination column, with the utility branch chosen by the outcome's sign.
pub fn subjective_transition<F: Float>(
    spec: &GameSpec<F>,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    params: &CptParams<F>,
) -> Result<Vec<F>> {
    subjective_transition_with(
        spec,
        policy,
        sigma_dist,
        values,
        params,
        RewardSource::Model,
        f(DEFAULT_U_PRIME_CAP),
    )
}

/// [`subjective_transition`] with explicit reward source and derivative cap.
pub fn subjective_transition_with<F: Float>(
    spec: &GameSpec<F>,
    policy: &PolicyTable<F>,
    sigma_dist: &SigmaDistribution<F>,
    values: &ValueTable<F>,
    params: &CptParams<F>,
    rewards: RewardSource<'_, F>,
    u_prime_cap: F,
) -> Result<Vec<F>> {
    let n = spec.n_states;
    let mut dpr = vec![F::zero(); n * n];
    for from in 0..n {
        let outcomes = enumerate_outcomes_with(from, policy, sigma_dist, values, spec, rewards)?;
        let vals = outcomes.values();
        let probs = outcomes.probabilities();
        let weights = cpt::decision_weights_of(&vals, &probs, params);
        for (k, entry) in outcomes.entries.iter().enumerate() {
            let slope = cpt::utility_prime(entry.value, params, u_prime_cap);
            dpr[from * n + entry.next_state] += weights[k] * spec.discount * slope;
        }
    }
    Ok(dpr)
}

/// Solves the linear system for the subjective visitation measure.
///
/// Fails with a diagnostic error when the system is singular or the measure
/// comes out negative, both of which signal that the subjective kernel is
/// not a contraction for the current parameters.
pub fn solve_eta<F: Float>(spec: &GameSpec<F>, dpr: &[F]) -> Result<SubjectiveVisitation<F>> {
    let n = spec.n_states;
    debug_assert_eq!(dpr.len(), n * n);
    let mut a = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { F::one() } else { F::zero() };
            a[i * n + j] = id - dpr[j * n + i];
        }
    }
    let b: Vec<F> = spec.initial_dist.clone();
    let mut eta = linalg::solve_dense(a.clone(), b.clone(), "subjective visitation")?;

    let residual = linalg::residual_inf(&a, &eta, &b);
    if residual > f(1e-8) {
        return Err(Error::SingularSystem {
            context: format!("subjective visitation residual {residual}"),
        });
    }
    for (s, v) in eta.iter_mut().enumerate() {
        if *v < F::zero() {
            if *v < -f::<F>(1e-9) {
                return Err(Error::NonPositiveVisitation {
                    state: s,
                    value: v.to_f64_lossy(),
                });
            }
            *v = F::zero();
        }
    }
    let total = eta.iter().fold(F::zero(), |acc, &v| acc + v);
    if !(total > F::zero()) {
        return Err(Error::NonPositiveVisitation {
            state: 0,
            value: total.to_f64_lossy(),
        });
    }
    let mu = eta.iter().map(|&v| v / total).collect();
    Ok(SubjectiveVisitation { eta, mu })
}

/// Local gradient term at one state: `sum_k u(z_k) grad_theta phi_k`,
/// restricted to the state's parameter row.
fn local_gradient<F: Float>(
    outcomes: &OutcomeSet<F>,
    action_probs: &[F],
    params: &CptParams<F>,
    weighting: GradientWeighting,
) -> Vec<F> {
    let n_actions = action_probs.len();
    let vals = outcomes.values();
    let probs = outcomes.probabilities();
    let ranked = cpt::rank_outcomes(&vals, &probs, params.x0);
    let n = vals.len();

    // grad of one outcome's probability in the theta row:
    // q_k * (e_{a_k} - pi)
    let grad_q = |k: usize, out: &mut Vec<F>| {
        let q = probs[k];
        let a = outcomes.entries[k].own_action;
        for (b, slot) in out.iter_mut().enumerate() {
            let indicator = if b == a { F::one() } else { F::zero() };
            *slot = q * (indicator - action_probs[b]);
        }
    };

    let mut grad = vec![F::zero(); n_actions];
    let mut tmp = vec![F::zero(); n_actions];

    match weighting {
        GradientWeighting::Exact => {
            // gains: suffix-accumulated probability gradients against the
            // derivative of the tail weighting; the term whose cumulative
            // covers the entire outcome set is analytically the zero vector
            // and is skipped rather than evaluated (w' diverges there).
            let mut acc = vec![F::zero(); n_actions];
            let mut prev: Option<(F, Vec<F>)> = None;
            for i in (ranked.first_gain..n).rev() {
                let k = ranked.order[i];
                grad_q(k, &mut tmp);
                for (a, t) in acc.iter_mut().zip(tmp.iter()) {
                    *a += *t;
                }
                let u = cpt::utility(vals[k], params);
                let cur = if ranked.c_incl[i] > F::zero() {
                    let w = cpt::weight_prime_pc(
                        ranked.incl[i],
                        ranked.c_incl[i],
                        params.gamma_w,
                        params.weighting,
                    );
                    Some((w, acc.clone()))
                } else {
                    None
                };
                if let Some((w, ref g)) = cur {
                    for (slot, &gv) in grad.iter_mut().zip(g.iter()) {
                        *slot += u * w * gv;
                    }
                }
                if let Some((w, ref g)) = prev {
                    for (slot, &gv) in grad.iter_mut().zip(g.iter()) {
                        *slot -= u * w * gv;
                    }
                }
                prev = cur;
            }
            // losses: prefix-accumulated against the head weighting
            let mut acc = vec![F::zero(); n_actions];
            let mut prev: Option<(F, Vec<F>)> = None;
            for i in 0..ranked.first_gain {
                let k = ranked.order[i];
                grad_q(k, &mut tmp);
                for (a, t) in acc.iter_mut().zip(tmp.iter()) {
                    *a += *t;
                }
                let u = cpt::utility(vals[k], params);
                let cur = if ranked.c_incl[i] > F::zero() {
                    let w = cpt::weight_prime_pc(
                        ranked.incl[i],
                        ranked.c_incl[i],
                        params.delta_w,
                        params.weighting,
                    );
                    Some((w, acc.clone()))
                } else {
                    None
                };
                if let Some((w, ref g)) = cur {
                    for (slot, &gv) in grad.iter_mut().zip(g.iter()) {
                        *slot += u * w * gv;
                    }
                }
                if let Some((w, ref g)) = prev {
                    for (slot, &gv) in grad.iter_mut().zip(g.iter()) {
                        *slot -= u * w * gv;
                    }
                }
                prev = cur;
            }
        }
        GradientWeighting::Diagonal | GradientWeighting::Differenced => {
            for i in 0..n {
                let k = ranked.order[i];
                let curv = if i < ranked.first_gain {
                    params.delta_w
                } else {
                    params.gamma_w
                };
                let w_in =
                    cpt::weight_prime_pc(ranked.incl[i], ranked.c_incl[i], curv, params.weighting);
                let coeff = match weighting {
                    GradientWeighting::Diagonal => w_in,
                    _ => {
                        w_in - cpt::weight_prime_pc(
                            ranked.excl[i],
                            ranked.c_excl[i],
                            curv,
                            params.weighting,
                        )
                    }
                };
                grad_q(k, &mut tmp);
                let u = cpt::utility(vals[k], params);
                for (slot, &gv) in grad.iter_mut().zip(tmp.iter()) {
                    *slot += u * coeff * gv;
                }
            }
        }
    }
    grad
}

/// Policy gradient of the nested CPT value at the start distribution, using
/// the true reward model and the exact weighting derivative.
///
/// Returns a flat `[state * n_actions + action]` vector proportional to the
/// true gradient (scaled by `1 / sum(eta)`, folded into the learning rate).
pub fn grad_value<F: Float>(
    policy: &PolicyTable<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
    sigma_dist: &SigmaDistribution<F>,
    params: &CptParams<F>,
) -> Result<Vec<F>> {
    grad_value_with(
        policy,
        values,
        spec,
        sigma_dist,
        params,
        RewardSource::Model,
        GradientWeighting::Exact,
        f(DEFAULT_U_PRIME_CAP),
    )
}

/// [`grad_value`] with explicit reward source, weighting-derivative variant,
/// and utility-derivative cap.
#[allow(clippy::too_many_arguments)]
pub fn grad_value_with<F: Float>(
    policy: &PolicyTable<F>,
    values: &ValueTable<F>,
    spec: &GameSpec<F>,
    sigma_dist: &SigmaDistribution<F>,
    params: &CptParams<F>,
    rewards: RewardSource<'_, F>,
    weighting: GradientWeighting,
    u_prime_cap: F,
) -> Result<Vec<F>> {
    let dpr = subjective_transition_with(
        spec, policy, sigma_dist, values, params, rewards, u_prime_cap,
    )?;
    let visitation = solve_eta(spec, &dpr)?;
    let n_actions = policy.n_actions();
    let mut grad = vec![F::zero(); spec.n_states * n_actions];
    for s in 0..spec.n_states {
        let outcomes = enumerate_outcomes_with(s, policy, sigma_dist, values, spec, rewards)?;
        let action_probs = policy.probs(s);
        let local = local_gradient(&outcomes, &action_probs, params, weighting);
        for (b, &g) in local.iter().enumerate() {
            grad[s * n_actions + b] = visitation.mu[s] * g;
        }
    }
    Ok(grad)
}
