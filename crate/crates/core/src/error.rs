use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or config field violated its contract.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// A probability left `[0, 1]` beyond the rounding tolerance.
    #[error("probability {value} outside [0, 1]")]
    ProbabilityDomain { value: f64 },

    /// A distribution failed validation (negative mass, bad normalization).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The CPT estimator was handed no samples.
    #[error("cannot estimate a CPT value from an empty sample set")]
    EmptySamples,

    /// No aggregate has been observed at a state that the computation must
    /// enumerate; signals insufficient exploration.
    #[error("agent {agent} has no aggregate observations at state {state}")]
    EmptySigmaSupport { agent: usize, state: usize },

    /// An observed aggregate does not match any achievable value.
    #[error("aggregate {value} for agent {agent} matches no achievable value")]
    UnknownAggregate { agent: usize, value: f64 },

    /// The experience store holds no samples for a key the computation
    /// needs a reward from.
    #[error("no experience at (state {state}, action {action}, aggregate {sigma_idx})")]
    MissingExperience {
        state: usize,
        action: usize,
        sigma_idx: usize,
    },

    /// Dense linear solve hit a zero pivot.
    #[error("singular linear system in {context}")]
    SingularSystem { context: String },

    /// The visitation solve produced a negative measure, i.e. the subjective
    /// transition kernel is not a contraction for these parameters.
    #[error("subjective visitation solve produced eta({state}) = {value} < 0")]
    NonPositiveVisitation { state: usize, value: f64 },

    /// Game/config file I/O.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Game/config file parse failure.
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
}

impl Error {
    /// True for failures of the numeric machinery at runtime (exit code 2 in
    /// the CLI) as opposed to input validation problems (exit code 1).
    pub fn is_diagnostic(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::NonPositiveVisitation { .. }
                | Error::EmptySigmaSupport { .. }
                | Error::UnknownAggregate { .. }
                | Error::MissingExperience { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
