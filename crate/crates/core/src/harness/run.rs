use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::{EnvKind, ExperimentConfig, Method};
use crate::agents::{evaluate, AcAgent, Agent, QAgent};
use crate::ddf::{build_pair_dataset, retrain_due, train_ddf, BinPredictor, BinSpec, DdfModel};
use crate::domain::{goal_distance, ActionSpace, Episode, Transition};
use crate::envs::GoalEnv;
use crate::error::Result;
use crate::goalgen::{generate_goal, goal_difficulty_report, GoalSample, GoalSource};
use crate::nn::Mlp;
use crate::replay::{ReplayBuffer, StateSource};
use crate::rng::{streams, RngHandle};

/// Checkpoints keep at most this many visited states for goal inspection.
pub const CHECKPOINT_POOL_SIZE: usize = 10_000;

/// One evaluation point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub env_steps: u64,
    pub success_rate: f64,
    pub mean_return: f64,
    /// Mean start-to-goal distance of training goals since the previous row:
    /// BFS steps on GridNav, Euclidean on PointReach.
    pub mean_goal_distance: Option<f64>,
    /// Held-out accuracy of the latest distance model.
    pub ddf_accuracy: Option<f64>,
    pub ddf_within_one: Option<f64>,
    pub ddf_retrains: usize,
    pub goals_curriculum: usize,
    pub goals_uniform_fallback: usize,
    pub goals_uniform_mix: usize,
    pub goals_warmup: usize,
    pub goals_uniform: usize,
}

impl MetricsRow {
    pub fn goal_sources(&self) -> [(GoalSource, usize); 5] {
        [
            (GoalSource::Curriculum, self.goals_curriculum),
            (GoalSource::UniformFallback, self.goals_uniform_fallback),
            (GoalSource::UniformMix, self.goals_uniform_mix),
            (GoalSource::Warmup, self.goals_warmup),
            (GoalSource::Uniform, self.goals_uniform),
        ]
    }
}

/// Per-episode goal telemetry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub start_step: u64,
    pub source: &'static str,
    pub predicted_bin: Option<usize>,
    pub candidates: usize,
    pub goal_distance: Option<f64>,
    pub length: usize,
    pub success: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub episodes: usize,
    pub agent_updates: usize,
    pub generator_calls: usize,
    pub ddf_retrains: usize,
    pub ddf_gradient_steps: usize,
}

/// Goals drawn from the generator at one point of training.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalSnapshot {
    pub env_steps: u64,
    pub samples: Vec<GoalSample>,
    /// Start-to-goal distance per sample, same measure as
    /// [`MetricsRow::mean_goal_distance`].
    pub distances: Vec<f64>,
}

impl GoalSnapshot {
    pub fn mean_distance(&self) -> Option<f64> {
        (!self.distances.is_empty())
            .then(|| self.distances.iter().sum::<f64>() / self.distances.len() as f64)
    }

    /// Whether any sample came from a trained model.
    pub fn post_warmup(&self) -> bool {
        self.samples.iter().any(|s| s.source != GoalSource::Warmup)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub method: Method,
    pub seed: u64,
    pub metrics: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeRecord>,
    pub snapshots: Vec<GoalSnapshot>,
    pub counters: RunCounters,
    pub ddf: Option<DdfModel>,
    pub networks: Vec<(String, Mlp)>,
    /// Subsample of visited `(state, achieved_goal)` pairs.
    pub state_pool: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RunOutput {
    pub fn final_success(&self) -> f64 {
        self.metrics.last().map_or(0.0, |r| r.success_rate)
    }
}

/// Start-to-goal distance used for telemetry.
fn distance_from_start<E: GoalEnv>(
    env: &E,
    start_dist: &Option<Vec<Option<usize>>>,
    s0: &[f64],
    goal: &[f64],
) -> Option<f64> {
    match (env.as_grid(), start_dist) {
        (Some(grid), Some(dist)) => {
            let cell = grid.decode(goal).ok()?;
            dist[cell.y * grid.width() + cell.x].map(|d| d as f64)
        }
        _ => goal_distance(&env.achieved_goal(s0), goal).ok(),
    }
}

/// Mutable state of one training run.
pub struct Trainer<E: GoalEnv> {
    config: ExperimentConfig,
    method: Method,
    seed: u64,
    env: E,
    eval_env: E,
    s0: Vec<f64>,
    start_dist: Option<Vec<Option<usize>>>,
    agent: Box<dyn Agent>,
    buffer: ReplayBuffer,
    bins: BinSpec,
    ddf: Option<DdfModel>,
    ddf_accuracy: Option<(f64, f64)>,
    last_retrain: u64,
    env_steps: u64,
    agent_rng: RngHandle,
    replay_rng: RngHandle,
    ddf_rng: RngHandle,
    goal_rng: RngHandle,
    eval_rng: RngHandle,
    counters: RunCounters,
    metrics: Vec<MetricsRow>,
    episodes: Vec<EpisodeRecord>,
    snapshots: Vec<GoalSnapshot>,
    pending_sources: [usize; 5],
    pending_distance: (f64, usize),
}

impl<E: GoalEnv> Trainer<E> {
    pub fn new(
        config: &ExperimentConfig,
        method: Method,
        seed: u64,
        env: E,
        agent: Box<dyn Agent>,
    ) -> Result<Self> {
        config.validate()?;
        let s0 = env.start_state();
        let start_dist = match env.as_grid() {
            Some(grid) => Some(grid.distances_from(grid.decode(&s0)?)?),
            None => None,
        };
        let root = RngHandle::new(seed, streams::ENV);
        Ok(Self {
            config: config.clone(),
            method,
            seed,
            eval_env: env.clone(),
            buffer: ReplayBuffer::new(config.replay.capacity, env.spec().horizon),
            env,
            s0,
            start_dist,
            agent,
            bins: config.bin_spec()?,
            ddf: None,
            ddf_accuracy: None,
            last_retrain: 0,
            env_steps: 0,
            agent_rng: root.sibling(streams::AGENT),
            replay_rng: root.sibling(streams::REPLAY),
            ddf_rng: root.sibling(streams::DDF),
            goal_rng: root.sibling(streams::GOALS),
            eval_rng: root.sibling(streams::EVAL),
            counters: RunCounters::default(),
            metrics: Vec::new(),
            episodes: Vec::new(),
            snapshots: Vec::new(),
            pending_sources: [0; 5],
            pending_distance: (0.0, 0),
        })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn counters(&self) -> RunCounters {
        self.counters
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn ddf(&self) -> Option<&DdfModel> {
        self.ddf.as_ref()
    }

    pub fn metrics(&self) -> &[MetricsRow] {
        &self.metrics
    }

    fn finished(&self) -> bool {
        self.env_steps >= self.config.experiment.total_env_steps
    }

    fn next_goal(&mut self) -> Result<GoalSample> {
        match self.method {
            Method::Curriculum => {
                self.counters.generator_calls += 1;
                generate_goal(
                    &self.s0,
                    &self.buffer,
                    self.ddf.as_ref().map(|m| m as &dyn BinPredictor),
                    &self.env,
                    &self.config.goalgen,
                    &mut self.goal_rng,
                )
            }
            Method::UniformBaseline => Ok(GoalSample {
                goal: self.env.sample_uniform_goal(&mut self.goal_rng),
                source: GoalSource::Uniform,
                predicted_bin: None,
                candidate_count_in_bin: 0,
            }),
        }
    }

    /// Draws goals from the generator as it stands now, on a private RNG, so
    /// the run itself is unaffected.
    pub fn snapshot_goal_distribution(&self, n_goals: usize) -> Result<GoalSnapshot> {
        let mut rng = RngHandle::new(
            self.seed ^ self.env_steps.rotate_left(32),
            streams::SNAPSHOT,
        );
        let mut samples = Vec::with_capacity(n_goals);
        for _ in 0..n_goals {
            samples.push(generate_goal(
                &self.s0,
                &self.buffer,
                self.ddf.as_ref().map(|m| m as &dyn BinPredictor),
                &self.env,
                &self.config.goalgen,
                &mut rng,
            )?);
        }
        let distances = match self.env.as_grid() {
            Some(grid) => goal_difficulty_report(&samples, grid, &self.s0)?
                .distances
                .into_iter()
                .map(|d| d as f64)
                .collect(),
            None => {
                let origin = self.env.achieved_goal(&self.s0);
                samples
                    .iter()
                    .map(|s| goal_distance(&origin, &s.goal))
                    .collect::<Result<_>>()?
            }
        };
        Ok(GoalSnapshot {
            env_steps: self.env_steps,
            samples,
            distances,
        })
    }

    fn retrain_ddf(&mut self) -> Result<()> {
        let episodes = self.buffer.recent_slice(self.config.ddf.recent_steps);
        if episodes.is_empty() {
            return Ok(());
        }
        let per_episode = self.config.ddf.pairs_per_retrain.div_ceil(episodes.len());
        let mut data = build_pair_dataset(episodes, per_episode, &self.bins, &mut self.ddf_rng)?;
        data.shuffle(&mut self.ddf_rng);
        data.truncate(self.config.ddf.pairs_per_retrain);
        let held = ((data.len() as f64) * self.config.ddf.holdout_fraction).round() as usize;
        let held = held.min(data.len().saturating_sub(1));
        let (holdout, train) = data.split_at(held);
        let (model, report) = train_ddf(
            self.env.spec().state_dim,
            &self.config.ddf.hidden,
            self.bins.clone(),
            train,
            &self.config.ddf_train(),
            &mut self.ddf_rng,
        )?;
        self.ddf_accuracy = if holdout.is_empty() {
            None
        } else {
            Some((model.accuracy(holdout, 0)?, model.accuracy(holdout, 1)?))
        };
        self.ddf = Some(model);
        self.last_retrain = self.env_steps;
        self.counters.ddf_retrains += 1;
        self.counters.ddf_gradient_steps += report.gradient_steps;
        Ok(())
    }

    fn evaluate_now(&mut self) -> Result<()> {
        let goals: Vec<Vec<f64>> = (0..self.config.experiment.eval_goal_count)
            .map(|_| self.eval_env.sample_uniform_goal(&mut self.eval_rng))
            .collect();
        let result = evaluate(self.agent.as_ref(), &self.eval_env, &goals)?;
        let s = self.pending_sources;
        let (sum, n) = self.pending_distance;
        self.metrics.push(MetricsRow {
            env_steps: self.env_steps,
            success_rate: result.success_rate,
            mean_return: result.mean_return,
            mean_goal_distance: (n > 0).then(|| sum / n as f64),
            ddf_accuracy: self.ddf_accuracy.map(|a| a.0),
            ddf_within_one: self.ddf_accuracy.map(|a| a.1),
            ddf_retrains: self.counters.ddf_retrains,
            goals_curriculum: s[0],
            goals_uniform_fallback: s[1],
            goals_uniform_mix: s[2],
            goals_warmup: s[3],
            goals_uniform: s[4],
        });
        self.pending_sources = [0; 5];
        self.pending_distance = (0.0, 0);
        Ok(())
    }

    fn after_step(&mut self) -> Result<()> {
        let exp = &self.config.experiment;
        if self.env_steps >= self.config.agent.learning_starts && !self.buffer.is_empty() {
            for _ in 0..self.config.agent.updates_per_step {
                let batch: Vec<Transition> = self
                    .buffer
                    .sample_her_batch(
                        self.config.replay.batch_size,
                        self.config.her(),
                        self.env.spec().epsilon,
                        &mut self.replay_rng,
                    )?
                    .into_iter()
                    .map(|s| s.transition)
                    .collect();
                self.agent.update(&batch)?;
                self.counters.agent_updates += 1;
            }
        }
        if self.env_steps.is_multiple_of(exp.eval_every) {
            self.evaluate_now()?;
        }
        let every = self.config.experiment.snapshot_every;
        if self.method == Method::Curriculum && every > 0 && self.env_steps.is_multiple_of(every) {
            let snap = self.snapshot_goal_distribution(self.config.experiment.snapshot_goals)?;
            self.snapshots.push(snap);
        }
        Ok(())
    }

    /// Collects one episode (cut short if the step budget runs out), updating
    /// the agent and the distance model along the way.
    pub fn run_episode(&mut self) -> Result<()> {
        let sample = self.next_goal()?;
        let source_index = GoalSource::ALL
            .iter()
            .position(|s| *s == sample.source)
            .expect("known source");
        self.pending_sources[source_index] += 1;
        let dist = distance_from_start(&self.env, &self.start_dist, &self.s0, &sample.goal);
        if let Some(d) = dist {
            self.pending_distance.0 += d;
            self.pending_distance.1 += 1;
        }

        let start_step = self.env_steps;
        let total = self.config.experiment.total_env_steps;
        let mut state = self.env.reset(&sample.goal)?;
        let mut transitions = Vec::new();
        loop {
            self.agent
                .set_progress(self.env_steps as f64 / total as f64);
            let action = self
                .agent
                .act(&state, &sample.goal, true, &mut self.agent_rng)?;
            let step = self.env.step(&action)?;
            transitions.push(Transition {
                state: std::mem::replace(&mut state, step.next_state.clone()),
                action,
                next_state: step.next_state,
                achieved_goal: step.achieved_goal,
                desired_goal: sample.goal.clone(),
                reward: step.reward,
                done: step.done,
            });
            self.env_steps += 1;
            self.after_step()?;
            if step.done || self.finished() {
                break;
            }
        }
        let success = transitions.last().is_some_and(|t| t.is_success());
        let length = transitions.len();
        self.buffer.push_episode(Episode::new(transitions)?)?;
        self.episodes.push(EpisodeRecord {
            episode: self.counters.episodes,
            start_step,
            source: sample.source.as_str(),
            predicted_bin: sample.predicted_bin,
            candidates: sample.candidate_count_in_bin,
            goal_distance: dist,
            length,
            success,
        });
        self.counters.episodes += 1;

        if self.method == Method::Curriculum
            && retrain_due(
                self.env_steps,
                self.config.ddf.retrain_interval,
                self.last_retrain,
            )
        {
            self.retrain_ddf()?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunOutput> {
        while !self.finished() {
            self.run_episode()?;
        }
        let mut pool = self.buffer.sample_states(
            CHECKPOINT_POOL_SIZE.min(self.buffer.len()),
            &mut RngHandle::new(self.seed, streams::SNAPSHOT),
        )?;
        pool.dedup();
        Ok(RunOutput {
            method: self.method,
            seed: self.seed,
            metrics: self.metrics,
            episodes: self.episodes,
            snapshots: self.snapshots,
            counters: self.counters,
            ddf: self.ddf,
            networks: self
                .agent
                .networks()
                .into_iter()
                .map(|(name, net)| (name.to_string(), net.clone()))
                .collect(),
            state_pool: pool,
        })
    }
}

/// Builds the agent matching an environment's action space.
pub fn build_agent<E: GoalEnv>(
    config: &ExperimentConfig,
    env: &E,
    seed: u64,
) -> Result<Box<dyn Agent>> {
    let spec = env.spec();
    let mut rng = RngHandle::new(seed, streams::INIT);
    Ok(match &spec.action_space {
        ActionSpace::Discrete { count } => Box::new(QAgent::new(
            spec.state_dim,
            spec.goal_dim,
            *count,
            config.agent.q_config(),
            &mut rng,
        )?),
        ActionSpace::Continuous { low, high } => Box::new(AcAgent::new(
            spec.state_dim,
            spec.goal_dim,
            low.clone(),
            high.clone(),
            config.agent.ac_config(),
            &mut rng,
        )?),
    })
}

/// One full training run of `config.experiment.method`.
pub fn run_training(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    run_method(config, config.experiment.method, seed)
}

pub fn run_method(config: &ExperimentConfig, method: Method, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    match config.env.kind {
        EnvKind::GridNav => {
            let env = config.grid_env()?;
            let agent = build_agent(config, &env, seed)?;
            Trainer::new(config, method, seed, env, agent)?.run()
        }
        EnvKind::PointReach => {
            let env = config.point_env()?;
            let agent = build_agent(config, &env, seed)?;
            Trainer::new(config, method, seed, env, agent)?.run()
        }
    }
}
