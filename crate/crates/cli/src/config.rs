//! Run configuration: one TOML file fully determines a run, seeds included.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cpt_rl::actor::GradientWeighting;
use cpt_rl::cpt::{CptParams, WeightingFamily};
use cpt_rl::game::{generate_experiment, ExperimentOverrides, GameSpec};
use cpt_rl::trainer::{LearningSchedule, TrainerConfig};
use cpt_rl::{Error, Result};

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Where the game comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    /// `"generate"` or `"file"`.
    pub source: String,
    /// Generator seed (`source = "generate"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Game file path (`source = "file"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_actions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    /// Draw the baseline reward per (state, action) instead of per state.
    #[serde(default)]
    pub self_by_action: bool,
}

impl Default for GameSection {
    fn default() -> Self {
        Self {
            source: "generate".into(),
            seed: Some(7),
            path: None,
            n_agents: None,
            n_states: None,
            n_actions: None,
            discount: None,
            self_by_action: false,
        }
    }
}

/// One agent's subjective parameters (defaults plus per-agent overrides).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CptSection {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma_w: f64,
    pub delta_w: f64,
    pub x0: f64,
    /// `"tversky-kahneman"` or `"prelec"`.
    pub weighting: String,
    /// Per-agent overrides of the defaults above.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<CptOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptOverride {
    pub agent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl Default for CptSection {
    fn default() -> Self {
        Self {
            alpha: 0.65,
            beta: 0.65,
            lambda: 2.6,
            gamma_w: 0.69,
            delta_w: 0.69,
            x0: 0.0,
            weighting: "tversky-kahneman".into(),
            agents: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub cr_scale: f64,
    pub cr_exponent: f64,
    pub ac_scale: f64,
    pub ac_exponent: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            cr_scale: 0.5,
            cr_exponent: 0.6,
            ac_scale: 0.3,
            ac_exponent: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub n_iters: usize,
    pub n_max: usize,
    pub n_runs: usize,
    pub workers: usize,
    pub out_dir: String,
    pub store_threshold: usize,
    pub tracked_state: usize,
    pub smoothing_window: usize,
    /// `"exact"`, `"diagonal"`, or `"differenced"`.
    pub grad_weighting: String,
    pub empirical_rewards: bool,
    pub u_prime_cap: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            n_iters: 3000,
            n_max: 48,
            n_runs: 1,
            workers: 1,
            out_dir: "out".into(),
            store_threshold: 32,
            tracked_state: 0,
            smoothing_window: 200,
            grad_weighting: "exact".into(),
            empirical_rewards: true,
            u_prime_cap: 1e3,
        }
    }
}

/// Full run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub cpt: CptSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        match self.game.source.as_str() {
            "generate" => {}
            "file" => {
                if self.game.path.is_none() {
                    return Err(invalid("game.path", "required when game.source = \"file\""));
                }
            }
            other => {
                return Err(invalid(
                    "game.source",
                    format!("must be \"generate\" or \"file\", got \"{other}\""),
                ));
            }
        }
        self.weighting_family()?;
        self.grad_weighting()?;
        // surface parameter and schedule problems now, with field names
        self.schedule()?;
        CptParams::<f64>::new(
            self.cpt.alpha,
            self.cpt.beta,
            self.cpt.lambda,
            self.cpt.gamma_w,
            self.cpt.delta_w,
            self.cpt.x0,
            self.weighting_family()?,
        )?;
        if self.run.n_iters == 0 {
            return Err(invalid("run.n_iters", "must be positive"));
        }
        if self.run.n_max == 0 {
            return Err(invalid("run.n_max", "must be positive"));
        }
        if self.run.n_runs == 0 {
            return Err(invalid("run.n_runs", "must be positive"));
        }
        if self.run.workers == 0 {
            return Err(invalid("run.workers", "must be positive"));
        }
        if !self.run.u_prime_cap.is_finite() || self.run.u_prime_cap <= 0.0 {
            return Err(invalid("run.u_prime_cap", "must be positive"));
        }
        Ok(())
    }

    pub fn weighting_family(&self) -> Result<WeightingFamily> {
        match self.cpt.weighting.as_str() {
            "tversky-kahneman" => Ok(WeightingFamily::TverskyKahneman),
            "prelec" => Ok(WeightingFamily::Prelec),
            other => Err(invalid(
                "cpt.weighting",
                format!("must be \"tversky-kahneman\" or \"prelec\", got \"{other}\""),
            )),
        }
    }

    pub fn grad_weighting(&self) -> Result<GradientWeighting> {
        match self.run.grad_weighting.as_str() {
            "exact" => Ok(GradientWeighting::Exact),
            "diagonal" => Ok(GradientWeighting::Diagonal),
            "differenced" => Ok(GradientWeighting::Differenced),
            other => Err(invalid(
                "run.grad_weighting",
                format!(
                    "must be \"exact\", \"diagonal\", or \"differenced\", got \"{other}\""
                ),
            )),
        }
    }

    pub fn schedule(&self) -> Result<LearningSchedule<f64>> {
        LearningSchedule::new(
            self.schedule.cr_scale,
            self.schedule.cr_exponent,
            self.schedule.ac_scale,
            self.schedule.ac_exponent,
        )
    }

    pub fn overrides(&self) -> ExperimentOverrides {
        ExperimentOverrides {
            n_agents: self.game.n_agents,
            n_states: self.game.n_states,
            n_actions: self.game.n_actions,
            discount: self.game.discount,
            self_by_action: self.game.self_by_action,
        }
    }

    /// Loads or generates the game this config points at.
    pub fn game_spec(&self) -> Result<GameSpec<f64>> {
        match self.game.source.as_str() {
            "generate" => Ok(generate_experiment(
                self.game.seed.unwrap_or(7),
                &self.overrides(),
            )),
            "file" => {
                let path = self.game.path.as_ref().expect("validated");
                GameSpec::load(Path::new(path))
            }
            _ => unreachable!("validated"),
        }
    }

    /// Subjective parameters per agent: section defaults plus overrides.
    pub fn agent_params(&self, n_agents: usize) -> Result<Vec<CptParams<f64>>> {
        let family = self.weighting_family()?;
        let mut params = Vec::with_capacity(n_agents);
        for agent in 0..n_agents {
            let mut alpha = self.cpt.alpha;
            let mut beta = self.cpt.beta;
            let mut lambda = self.cpt.lambda;
            let mut gamma_w = self.cpt.gamma_w;
            let mut delta_w = self.cpt.delta_w;
            let mut x0 = self.cpt.x0;
            for o in &self.cpt.agents {
                if o.agent == agent {
                    alpha = o.alpha.unwrap_or(alpha);
                    beta = o.beta.unwrap_or(beta);
                    lambda = o.lambda.unwrap_or(lambda);
                    gamma_w = o.gamma_w.unwrap_or(gamma_w);
                    delta_w = o.delta_w.unwrap_or(delta_w);
                    x0 = o.x0.unwrap_or(x0);
                }
            }
            params.push(CptParams::new(
                alpha, beta, lambda, gamma_w, delta_w, x0, family,
            )?);
        }
        for o in &self.cpt.agents {
            if o.agent >= n_agents {
                return Err(invalid(
                    "cpt.agents",
                    format!("override for agent {} but the game has {n_agents}", o.agent),
                ));
            }
        }
        Ok(params)
    }

    pub fn trainer_config(&self) -> Result<TrainerConfig<f64>> {
        let mut cfg = TrainerConfig::new(self.run.seed);
        cfg.schedule = self.schedule()?;
        cfg.n_iters = self.run.n_iters;
        cfg.n_max = self.run.n_max;
        cfg.store_threshold = self.run.store_threshold;
        cfg.workers = self.run.workers;
        cfg.grad_weighting = self.grad_weighting()?;
        cfg.empirical_rewards = self.run.empirical_rewards;
        cfg.u_prime_cap = self.run.u_prime_cap;
        cfg.tracked_state = self.run.tracked_state;
        cfg.smoothing_window = self.run.smoothing_window;
        Ok(cfg)
    }
}
