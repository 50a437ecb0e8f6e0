use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{AcConfig, QConfig};
use crate::ddf::{BinSpec, DdfTrainConfig};
use crate::envs::{Cell, GridNavEnv, PointReachEnv};
use crate::error::{Error, Result};
use crate::goalgen::GoalGenConfig;
use crate::replay::HerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Curriculum,
    #[serde(alias = "uniform")]
    UniformBaseline,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Curriculum, Method::UniformBaseline];

    /// Short tag used in file names.
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Curriculum => "curriculum",
            Method::UniformBaseline => "uniform",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curriculum" => Ok(Method::Curriculum),
            "uniform" | "uniform_baseline" => Ok(Method::UniformBaseline),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    GridNav,
    PointReach,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub method: Method,
    pub total_env_steps: u64,
    pub eval_every: u64,
    pub eval_goal_count: usize,
    pub seeds: Vec<u64>,
    /// Goal-distribution snapshot period in env steps; 0 disables snapshots.
    pub snapshot_every: u64,
    pub snapshot_goals: usize,
    /// Consecutive eval points a success threshold must hold for.
    pub sustain_evals: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            method: Method::Curriculum,
            total_env_steps: 200_000,
            eval_every: 2_000,
            eval_goal_count: 50,
            seeds: vec![0, 1, 2, 3],
            snapshot_every: 0,
            snapshot_goals: 100,
            sustain_evals: 3,
            output_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    pub horizon: usize,
    /// Map file for GridNav; relative paths resolve against the config file.
    pub map: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub door_y: usize,
    pub start: [usize; 2],
    pub point_start: [f64; 2],
    pub max_step: f64,
    pub epsilon: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            kind: EnvKind::GridNav,
            horizon: 50,
            map: None,
            width: 20,
            height: 20,
            door_y: 10,
            start: [2, 10],
            point_start: [0.1, 0.1],
            max_step: 0.03,
            epsilon: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySection {
    pub capacity: usize,
    pub her_k: usize,
    pub batch_size: usize,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            capacity: 100_000,
            her_k: 4,
            batch_size: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdfSection {
    pub num_bins: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub pairs_per_retrain: usize,
    pub retrain_interval: u64,
    /// Size of the recent-experience window the pairs are drawn from.
    pub recent_steps: usize,
    /// Share of each retrain dataset held out for accuracy reporting.
    pub holdout_fraction: f64,
}

impl Default for DdfSection {
    fn default() -> Self {
        Self {
            num_bins: 5,
            hidden: vec![128, 128],
            learning_rate: 1e-3,
            epochs: 5,
            batch_size: 64,
            pairs_per_retrain: 10_000,
            retrain_interval: 5_000,
            recent_steps: 20_000,
            holdout_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    /// Actor step size for continuous control.
    pub actor_learning_rate: f64,
    pub tau: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_anneal_fraction: f64,
    pub noise_scale: f64,
    /// Env steps collected before the first update.
    pub learning_starts: u64,
    pub updates_per_step: usize,
}

impl Default for AgentSection {
    fn default() -> Self {
        let q = QConfig::default();
        let ac = AcConfig::default();
        Self {
            hidden: q.hidden,
            gamma: q.gamma,
            learning_rate: q.learning_rate,
            actor_learning_rate: ac.actor_learning_rate,
            tau: q.tau,
            eps_start: q.eps_start,
            eps_end: q.eps_end,
            eps_anneal_fraction: q.eps_anneal_fraction,
            noise_scale: ac.noise_scale,
            learning_starts: 1_000,
            updates_per_step: 1,
        }
    }
}

impl AgentSection {
    pub fn q_config(&self) -> QConfig {
        QConfig {
            hidden: self.hidden.clone(),
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            tau: self.tau,
            eps_start: self.eps_start,
            eps_end: self.eps_end,
            eps_anneal_fraction: self.eps_anneal_fraction,
        }
    }

    pub fn ac_config(&self) -> AcConfig {
        AcConfig {
            hidden: self.hidden.clone(),
            gamma: self.gamma,
            actor_learning_rate: self.actor_learning_rate,
            critic_learning_rate: self.learning_rate,
            tau: self.tau,
            noise_scale: self.noise_scale,
        }
    }
}

/// Everything a run needs; every field has a default and unknown keys are
/// rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub env: EnvSection,
    pub replay: ReplaySection,
    pub ddf: DdfSection,
    pub goalgen: GoalGenConfig,
    pub agent: AgentSection,
}

impl ExperimentConfig {
    /// Parses and validates; relative map paths are resolved against `base`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let (Some(base), Some(map)) = (base, config.env.map.as_mut()) {
            if map.is_relative() {
                *map = base.join(&*map);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.eval_every == 0 || e.total_env_steps < e.eval_every {
            return Err(Error::Config(
                "need total_env_steps >= eval_every >= 1".into(),
            ));
        }
        if e.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must not be empty".into()));
        }
        if e.sustain_evals == 0 {
            return Err(Error::Config(
                "experiment.sustain_evals must be positive".into(),
            ));
        }
        if self.replay.capacity == 0 || self.replay.batch_size == 0 {
            return Err(Error::Config(
                "replay.capacity and replay.batch_size must be positive".into(),
            ));
        }
        if self.ddf.epochs == 0 || self.ddf.batch_size == 0 || self.ddf.pairs_per_retrain == 0 {
            return Err(Error::Config(
                "ddf.epochs, ddf.batch_size and ddf.pairs_per_retrain must be positive".into(),
            ));
        }
        if self.ddf.retrain_interval == 0 || self.ddf.recent_steps == 0 {
            return Err(Error::Config(
                "ddf.retrain_interval and ddf.recent_steps must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.ddf.holdout_fraction) {
            return Err(Error::Config(
                "ddf.holdout_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(self.ddf.learning_rate > 0.0
            && self.agent.learning_rate > 0.0
            && self.agent.actor_learning_rate > 0.0)
        {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.agent.gamma) {
            return Err(Error::Config("agent.gamma must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.agent.tau) {
            return Err(Error::Config("agent.tau must lie in [0, 1]".into()));
        }
        self.bin_spec()?;
        self.goalgen.validate(self.ddf.num_bins)?;
        Ok(())
    }

    pub fn bin_spec(&self) -> Result<BinSpec> {
        BinSpec::new(self.env.horizon, self.ddf.num_bins).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn her(&self) -> HerConfig {
        HerConfig {
            k: self.replay.her_k,
        }
    }

    pub fn ddf_train(&self) -> DdfTrainConfig {
        DdfTrainConfig {
            epochs: self.ddf.epochs,
            batch_size: self.ddf.batch_size,
            learning_rate: self.ddf.learning_rate,
        }
    }

    pub fn grid_env(&self) -> Result<GridNavEnv> {
        let env = &self.env;
        match &env.map {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read map {}: {e}", path.display()))
                })?;
                GridNavEnv::from_map(&text, env.horizon)
            }
            None => GridNavEnv::two_rooms(
                env.width,
                env.height,
                env.door_y,
                Cell::new(env.start[0], env.start[1]),
                env.horizon,
            ),
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn point_env(&self) -> Result<PointReachEnv> {
        let env = &self.env;
        PointReachEnv::new(env.point_start, env.max_step, env.horizon, env.epsilon)
            .map_err(|e| Error::Config(e.to_string()))
    }
}
