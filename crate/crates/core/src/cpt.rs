//! Cumulative prospect theory on discrete outcome sets: weighting and utility
//! function families, rank-dependent decision weights, the exact CPT value of
//! a finite distribution, and the sample-based estimator.
//!
//! A CPT value distorts an expectation in two ways. Outcomes are measured by
//! a sign-dependent power utility around a reference point `x0`, with losses
//! scaled by an aversion multiplier `lambda`. Probabilities are replaced by
//! decision weights: differences of a weighting function applied to cumulative
//! (tail for gains, head for losses) probabilities, so extreme outcomes are
//! overweighted relative to their raw probability.

use crate::error::{Error, Result};
use crate::scalar::{f, Float};

/// Tolerance for probabilities drifting out of `[0, 1]` by accumulation.
const PROB_TOL: f64 = 1e-12;

/// Cap applied when a weighting-function derivative is evaluated at a
/// boundary where the analytic value diverges.
const OMEGA_PRIME_CAP: f64 = 1e12;

/// Probability weighting function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightingFamily {
    /// `w(p) = p^g / (p^g + (1-p)^g)^(1/g)`
    #[default]
    TverskyKahneman,
    /// `w(p) = exp(-(-ln p)^g)`
    Prelec,
}

/// One agent's subjective risk profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptParams<F> {
    /// Gain utility exponent, in `(0, 1]`.
    pub alpha: F,
    /// Loss utility exponent, in `(0, 1]`.
    pub beta: F,
    /// Loss-aversion multiplier, `> 0` (typically `>= 1`).
    pub lambda: F,
    /// Gain weighting curvature, in `(0, 1]`.
    pub gamma_w: F,
    /// Loss weighting curvature, in `(0, 1]`.
    pub delta_w: F,
    /// Reference point separating gains from losses (reward units).
    pub x0: F,
    /// Weighting function family applied to cumulative probabilities.
    pub weighting: WeightingFamily,
}

impl<F: Float> CptParams<F> {
    pub fn new(
        alpha: F,
        beta: F,
        lambda: F,
        gamma_w: F,
        delta_w: F,
        x0: F,
        weighting: WeightingFamily,
    ) -> Result<Self> {
        let check_unit = |name: &str, v: F| -> Result<()> {
            if !(v > F::zero() && v <= F::one()) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field: name.to_string(),
                    reason: format!("must lie in (0, 1], got {v}"),
                });
            }
            Ok(())
        };
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        check_unit("gamma_w", gamma_w)?;
        check_unit("delta_w", delta_w)?;
        if !(lambda > F::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                field: "lambda".into(),
                reason: format!("must be positive, got {lambda}"),
            });
        }
        if !x0.is_finite() {
            return Err(Error::InvalidParameter {
                field: "x0".into(),
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            alpha,
            beta,
            lambda,
            gamma_w,
            delta_w,
            x0,
            weighting,
        })
    }

    /// Identity parameters: CPT collapses to plain expectation of `X - x0`
    /// with `x0 = 0`.
    pub fn risk_neutral() -> Self {
        Self {
            alpha: F::one(),
            beta: F::one(),
            lambda: F::one(),
            gamma_w: F::one(),
            delta_w: F::one(),
            x0: F::zero(),
            weighting: WeightingFamily::TverskyKahneman,
        }
    }

    /// Conventional curved profile (`alpha = beta = 0.65`,
    /// `gamma = delta = 0.69`, Tversky-Kahneman weighting) at a given
    /// loss-aversion level.
    pub fn loss_averse(lambda: F) -> Self {
        Self {
            alpha: f(0.65),
            beta: f(0.65),
            lambda,
            gamma_w: f(0.69),
            delta_w: f(0.69),
            x0: F::zero(),
            weighting: WeightingFamily::TverskyKahneman,
        }
    }

    pub fn is_risk_neutral(&self) -> bool {
        self.alpha == F::one()
            && self.beta == F::one()
            && self.lambda == F::one()
            && self.gamma_w == F::one()
            && self.delta_w == F::one()
            && self.x0 == F::zero()
    }

    /// Weighting function for cumulative gain probabilities.
    pub fn weight_gain(&self, p: F) -> Result<F> {
        weight(p, self.gamma_w, self.weighting)
    }

    /// Weighting function for cumulative loss probabilities.
    pub fn weight_loss(&self, p: F) -> Result<F> {
        weight(p, self.delta_w, self.weighting)
    }
}

/// A finite discrete random variable as `(value, probability)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<F> {
    outcomes: Vec<(F, F)>,
}

impl<F: Float> DiscreteDistribution<F> {
    pub fn new(outcomes: Vec<(F, F)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        let mut total = F::zero();
        for &(v, p) in &outcomes {
            if !v.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "non-finite outcome value {v}"
                )));
            }
            if !(p >= F::zero()) {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {p}"
                )));
            }
            total += p;
        }
        if (total - F::one()).abs() > f(PROB_TOL) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(F, F)] {
        &self.outcomes
    }
}

fn clamp_prob<F: Float>(p: F) -> Result<F> {
    if p < F::zero() {
        if p >= -f::<F>(PROB_TOL) {
            return Ok(F::zero());
        }
        return Err(Error::ProbabilityDomain {
            value: p.to_f64_lossy(),
        });
    }
    if p > F::one() {
        if p <= F::one() + f(PROB_TOL) {
            return Ok(F::one());
        }
        return Err(Error::ProbabilityDomain {
            value: p.to_f64_lossy(),
        });
    }
    if !p.is_finite() {
        return Err(Error::ProbabilityDomain {
            value: p.to_f64_lossy(),
        });
    }
    Ok(p)
}

/// Probability weighting function `w(p)` with the given curvature.
///
/// `p` may overshoot `[0, 1]` by up to `1e-12` (cumulative-sum rounding) and
/// is clamped; anything further out is a domain error.
pub fn weight<F: Float>(p: F, curvature: F, family: WeightingFamily) -> Result<F> {
    if !(curvature > F::zero()) {
        return Err(Error::InvalidParameter {
            field: "curvature".into(),
            reason: format!("must be positive, got {curvature}"),
        });
    }
    let p = clamp_prob(p)?;
    Ok(weight_pc(p, F::one() - p, curvature, family))
}

/// `w(p)` evaluated from the pair `(p, c)` with `c = 1 - p` maintained by
/// direct summation, so accuracy is preserved near both endpoints.
pub(crate) fn weight_pc<F: Float>(p: F, c: F, curvature: F, family: WeightingFamily) -> F {
    if curvature == F::one() {
        return p; // identity weighting, exact
    }
    if p <= F::zero() {
        return F::zero();
    }
    if c <= F::zero() {
        return F::one();
    }
    match family {
        WeightingFamily::TverskyKahneman => {
            let pg = p.powf(curvature);
            let cg = c.powf(curvature);
            pg / (pg + cg).powf(F::one() / curvature)
        }
        WeightingFamily::Prelec => {
            // ln p from the complement when p is near 1.
            let lnp = if c < f(0.5) { (-c).ln_1p() } else { p.ln() };
            (-(-lnp).powf(curvature)).exp()
        }
    }
}

/// Derivative `w'(p)` from the `(p, 1 - p)` pair. Values at the endpoints
/// diverge for curvature `< 1` and are capped at `1e12`.
pub(crate) fn weight_prime_pc<F: Float>(p: F, c: F, curvature: F, family: WeightingFamily) -> F {
    if curvature == F::one() {
        return F::one();
    }
    let cap = f(OMEGA_PRIME_CAP);
    if p <= F::zero() || c <= F::zero() {
        return cap;
    }
    let g = curvature;
    let v = match family {
        WeightingFamily::TverskyKahneman => {
            let pg = p.powf(g);
            let cg = c.powf(g);
            let d = pg + cg;
            let d_pow = d.powf(-F::one() / g);
            let t1 = g * p.powf(g - F::one()) * d_pow;
            let t2 = pg * (d_pow / d) * (p.powf(g - F::one()) - c.powf(g - F::one()));
            t1 - t2
        }
        WeightingFamily::Prelec => {
            let lnp = if c < f(0.5) { (-c).ln_1p() } else { p.ln() };
            let w = (-(-lnp).powf(g)).exp();
            w * g * (-lnp).powf(g - F::one()) / p
        }
    };
    v.min(cap)
}

/// Sign-dependent utility of `x` relative to the reference point: gains map
/// through `y^alpha`, losses through `-lambda * (-y)^beta`.
pub fn utility<F: Float>(x: F, params: &CptParams<F>) -> F {
    let y = x - params.x0;
    if y >= F::zero() {
        if params.alpha == F::one() {
            y
        } else {
            y.powf(params.alpha)
        }
    } else if params.beta == F::one() {
        -(params.lambda * -y)
    } else {
        -(params.lambda * (-y).powf(params.beta))
    }
}

/// Derivative of [`utility`] in `x`, capped at `cap` where the power form
/// diverges near the reference point. Positive on both branches.
pub fn utility_prime<F: Float>(x: F, params: &CptParams<F>, cap: F) -> F {
    let y = x - params.x0;
    let v = if y > F::zero() {
        params.alpha * y.powf(params.alpha - F::one())
    } else if y < F::zero() {
        params.lambda * params.beta * (-y).powf(params.beta - F::one())
    } else if params.alpha == F::one() {
        F::one()
    } else {
        cap
    };
    v.min(cap)
}

/// Rank structure of an outcome set: stable ascending sort with head/tail
/// cumulative probabilities and their directly-summed complements.
///
/// Probabilities must be non-negative and sum to at most `1` up to the
/// callers' validation tolerance; cumulative values are clamped into `[0, 1]`.
pub(crate) struct Ranked<F> {
    /// Input indices in ascending value order (ties keep input order).
    pub order: Vec<usize>,
    /// Position in `order` where gains (`value >= x0`) start.
    pub first_gain: usize,
    /// Cumulative probability including the outcome: head sums for losses,
    /// tail sums for gains.
    pub incl: Vec<F>,
    /// Cumulative probability excluding the outcome.
    pub excl: Vec<F>,
    /// `1 - incl`, by direct summation of the remaining outcomes.
    pub c_incl: Vec<F>,
    /// `1 - excl`, by direct summation.
    pub c_excl: Vec<F>,
}

pub(crate) fn rank_outcomes<F: Float>(values: &[F], probs: &[F], x0: F) -> Ranked<F> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("outcome values must not be NaN")
    });
    let first_gain = order.partition_point(|&k| values[k] < x0);

    // prefix[i] = sum of probs strictly below sorted position i,
    // suffix[i] = sum strictly above; accumulated directly so complements
    // stay accurate near 0 and 1.
    let mut prefix = vec![F::zero(); n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + probs[order[i]];
    }
    let mut suffix = vec![F::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + probs[order[i]];
    }

    let clamp = |v: F| v.max(F::zero()).min(F::one());
    let mut incl = vec![F::zero(); n];
    let mut excl = vec![F::zero(); n];
    let mut c_incl = vec![F::zero(); n];
    let mut c_excl = vec![F::zero(); n];
    for i in 0..n {
        let q = probs[order[i]];
        if i < first_gain {
            // loss: head cumulative from the most negative outcome
            incl[i] = clamp(prefix[i] + q);
            excl[i] = clamp(prefix[i]);
            c_incl[i] = clamp(suffix[i + 1]);
            c_excl[i] = clamp(suffix[i + 1] + q);
        } else {
            // gain: tail cumulative from the largest outcome
            incl[i] = clamp(suffix[i + 1] + q);
            excl[i] = clamp(suffix[i + 1]);
            c_incl[i] = clamp(prefix[i]);
            c_excl[i] = clamp(prefix[i] + q);
        }
    }
    Ranked {
        order,
        first_gain,
        incl,
        excl,
        c_incl,
        c_excl,
    }
}

impl<F: Float> Ranked<F> {
    /// Decision weight of the outcome at sorted position `i`.
    pub fn weight_at(&self, i: usize, params: &CptParams<F>) -> F {
        let (curv, fam) = if i < self.first_gain {
            (params.delta_w, params.weighting)
        } else {
            (params.gamma_w, params.weighting)
        };
        let hi = weight_pc(self.incl[i], self.c_incl[i], curv, fam);
        let lo = weight_pc(self.excl[i], self.c_excl[i], curv, fam);
        (hi - lo).max(F::zero())
    }
}

/// Per-outcome decision weights aligned with the input order.
pub(crate) fn decision_weights_of<F: Float>(
    values: &[F],
    probs: &[F],
    params: &CptParams<F>,
) -> Vec<F> {
    let ranked = rank_outcomes(values, probs, params.x0);
    let mut out = vec![F::zero(); values.len()];
    for i in 0..values.len() {
        out[ranked.order[i]] = ranked.weight_at(i, params);
    }
    out
}

/// Rank-dependent decision weights of a distribution.
///
/// Returns `(value, weight)` sorted ascending by value relative to the
/// reference point. With identity curvatures each weight equals the
/// outcome's probability.
pub fn decision_weights<F: Float>(
    dist: &DiscreteDistribution<F>,
    params: &CptParams<F>,
) -> Vec<(F, F)> {
    let values: Vec<F> = dist.outcomes().iter().map(|&(v, _)| v).collect();
    let probs: Vec<F> = dist.outcomes().iter().map(|&(_, p)| p).collect();
    let ranked = rank_outcomes(&values, &probs, params.x0);
    (0..values.len())
        .map(|i| (values[ranked.order[i]], ranked.weight_at(i, params)))
        .collect()
}

/// Exact CPT value of a finite discrete distribution.
pub fn cpt_exact<F: Float>(dist: &DiscreteDistribution<F>, params: &CptParams<F>) -> F {
    let values: Vec<F> = dist.outcomes().iter().map(|&(v, _)| v).collect();
    let probs: Vec<F> = dist.outcomes().iter().map(|&(_, p)| p).collect();
    cpt_value_of_pairs(&values, &probs, params)
}

/// CPT value of raw `(value, probability)` arrays without distribution
/// validation; callers guarantee non-negative probabilities summing to 1
/// within their own tolerance.
pub(crate) fn cpt_value_of_pairs<F: Float>(values: &[F], probs: &[F], params: &CptParams<F>) -> F {
    let ranked = rank_outcomes(values, probs, params.x0);
    let mut total = F::zero();
    for i in 0..values.len() {
        let w = ranked.weight_at(i, params);
        total += w * utility(values[ranked.order[i]], params);
    }
    total
}

/// Sample-based CPT estimator.
///
/// Sorts the samples ascending (stable) and weights each by the increment of
/// the weighting function over its empirical rank: tail ranks for gains, head
/// ranks for losses. Consistent for [`cpt_exact`] as the sample count grows;
/// with risk-neutral parameters it reduces to the sample mean.
pub fn cpt_estimate<F: Float>(samples: &[F], params: &CptParams<F>) -> Result<F> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    for &s in samples {
        if !s.is_finite() {
            return Err(Error::InvalidParameter {
                field: "samples".into(),
                reason: format!("non-finite sample {s}"),
            });
        }
    }
    let mut sorted: Vec<F> = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));

    let n = sorted.len();
    let nf = f::<F>(n as f64);
    let count = |k: usize| f::<F>(k as f64) / nf;

    let mut rho_plus = F::zero();
    let mut rho_minus = F::zero();
    for (idx, &x) in sorted.iter().enumerate() {
        let i = idx + 1; // 1-based ascending rank
        let y = x - params.x0;
        if y >= F::zero() {
            let hi = weight_pc(
                count(n + 1 - i),
                count(i - 1),
                params.gamma_w,
                params.weighting,
            );
            let lo = weight_pc(count(n - i), count(i), params.gamma_w, params.weighting);
            let u = if params.alpha == F::one() {
                y
            } else {
                y.powf(params.alpha)
            };
            rho_plus += u * (hi - lo);
        } else {
            let hi = weight_pc(count(i), count(n - i), params.delta_w, params.weighting);
            let lo = weight_pc(
                count(i - 1),
                count(n + 1 - i),
                params.delta_w,
                params.weighting,
            );
            let u = if params.beta == F::one() {
                params.lambda * -y
            } else {
                params.lambda * (-y).powf(params.beta)
            };
            rho_minus += u * (hi - lo);
        }
    }
    Ok(rho_plus - rho_minus)
}
