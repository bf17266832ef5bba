//! Risk-sensitive multi-agent reinforcement learning on network aggregative
//! Markov games, with cumulative prospect theory (CPT) valuation.
//!
//! The crate provides:
//!
//! - [`cpt`]: weighting/utility families, exact CPT values of discrete
//!   distributions, and the sorted-sample estimator;
//! - [`game`]: the network aggregative Markov game, its simulation
//!   primitives, and the randomized benchmark generator;
//! - [`critic`]: the nested CPT one-step backup (exact and sampled) and the
//!   contraction diagnostics;
//! - [`actor`]: softmax policies, the subjective visitation measure, and the
//!   nested CPT policy gradient;
//! - [`trainer`]: the distributed actor-critic loop, two-timescale schedules,
//!   and the loss-aversion scenario sweep.
//!
//! All numerics are generic over the scalar type through [`scalar::Float`];
//! `f64` aliases for the main types are exported at the crate root.

// index loops mirror the matrix notation; negated comparisons in validation
// deliberately trap NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod actor;
pub mod cpt;
pub mod critic;
pub mod error;
pub mod game;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod trainer;

#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};
pub use scalar::Float;

/// `f64` aliases for the main public types.
pub type CptParams64 = cpt::CptParams<f64>;
pub type DiscreteDistribution64 = cpt::DiscreteDistribution<f64>;
pub type GameSpec64 = game::GameSpec<f64>;
pub type PolicyTable64 = actor::PolicyTable<f64>;
pub type ValueTable64 = critic::ValueTable<f64>;
pub type SigmaDistribution64 = actor::SigmaDistribution<f64>;
pub type ExperienceStore64 = trainer::ExperienceStore<f64>;
pub type LearningSchedule64 = trainer::LearningSchedule<f64>;
pub type TrainerConfig64 = trainer::TrainerConfig<f64>;
pub type TrainingResult64 = trainer::TrainingResult<f64>;
