//! Shared fixtures for the unit tests.

use crate::actor::{PolicyTable, SigmaDistribution};
use crate::game::{GameSpec, RewardModel};

/// Two-agent, two-state, two-action game with round-number kernel rows and
/// rewards. Agent 0 sees agent 1's action directly (weight 1), so every
/// (own action, aggregate) pair corresponds to exactly one joint action.
pub(crate) fn toy_spec() -> GameSpec<f64> {
    let transition = vec![
        // state 0, joints (a0,a1) = 00, 01, 10, 11
        1.0, 0.0, 0.5, 0.5, 0.25, 0.75, 0.0, 1.0,
        // state 1
        0.5, 0.5, 0.75, 0.25, 1.0, 0.0, 0.25, 0.75,
    ];
    GameSpec::from_parts(
        2,
        2,
        2,
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        transition,
        RewardModel {
            r_self: vec![vec![1.0, -1.0], vec![0.5, 0.5]],
            r_com: vec![vec![2.0, 1.0], vec![-1.0, 0.5]],
            r_self_by_action: None,
        },
        0.5,
        vec![0.5, 0.5],
        3.0,
    )
    .unwrap()
}

/// Agent-0 policy for [`toy_spec`]: (0.75, 0.25) at state 0, (0.5, 0.5) at
/// state 1.
pub(crate) fn toy_policy() -> PolicyTable<f64> {
    let mut p = PolicyTable::new(0, 2, 2);
    p.set_theta(0, &[0.75f64.ln(), 0.25f64.ln()]);
    p.set_theta(1, &[0.0, 0.0]);
    p
}

/// Agent-0 empirical aggregate distribution for [`toy_spec`]:
/// state 0 -> (0.5, 0.5), state 1 -> (0.25, 0.75).
pub(crate) fn toy_sigma_dist() -> SigmaDistribution<f64> {
    let spec = toy_spec();
    let mut d = SigmaDistribution::new(&spec, 0);
    d.observe(0, 0);
    d.observe(0, 1);
    d.observe(1, 0);
    d.observe(1, 1);
    d.observe(1, 1);
    d.observe(1, 1);
    d
}
