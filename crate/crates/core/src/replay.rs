//! Episodic replay with hindsight relabeling.
//!
//! Episodes are stored exactly as they were experienced. Relabeling happens
//! only when the learner samples a batch, so the distance model always sees
//! real temporal structure.

use std::collections::VecDeque;

use rand::Rng;

use crate::domain::{sparse_reward, Episode, Transition};
use crate::error::{Error, Result};
use crate::rng::RngHandle;

/// "future" hindsight relabeling with `k` relabeled goals per real one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HerConfig {
    pub k: usize,
}

impl Default for HerConfig {
    fn default() -> Self {
        Self { k: 4 }
    }
}

impl HerConfig {
    pub fn relabel_probability(&self) -> f64 {
        self.k as f64 / (self.k as f64 + 1.0)
    }
}

/// One draw of [`ReplayBuffer::sample_her_batch`].
#[derive(Clone, Debug)]
pub struct HerSample {
    pub transition: Transition,
    /// Step of the drawn transition inside its episode.
    pub step: usize,
    /// Step whose achieved goal replaced the desired goal, if relabeled.
    pub goal_step: Option<usize>,
}

/// Anything that can hand out visited states for goal generation.
pub trait StateSource {
    /// Number of transitions currently available.
    fn stored_steps(&self) -> usize;

    /// `n` uniform draws of `(next_state, achieved_goal)`, with replacement.
    fn sample_states(&self, n: usize, rng: &mut RngHandle) -> Result<Vec<(Vec<f64>, Vec<f64>)>>;
}

#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    episodes: VecDeque<Episode>,
    /// Global index of each stored episode's first transition.
    starts: VecDeque<u64>,
    capacity: usize,
    horizon: usize,
    stored: usize,
    total_steps_stored: u64,
}

impl ReplayBuffer {
    /// `capacity` counts transitions; `horizon` bounds episode length.
    pub fn new(capacity: usize, horizon: usize) -> Self {
        Self {
            episodes: VecDeque::new(),
            starts: VecDeque::new(),
            capacity,
            horizon,
            stored: 0,
            total_steps_stored: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Transitions currently held.
    pub fn len(&self) -> usize {
        self.stored
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Transitions ever pushed, including evicted ones.
    pub fn total_steps_stored(&self) -> u64 {
        self.total_steps_stored
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }

    /// Appends an episode, evicting whole episodes oldest-first until the
    /// buffer fits its capacity again.
    pub fn push_episode(&mut self, episode: Episode) -> Result<()> {
        if episode.len() > self.horizon {
            return Err(Error::InvalidEpisode(format!(
                "length {} exceeds horizon {}",
                episode.len(),
                self.horizon
            )));
        }
        if episode.len() > self.capacity {
            return Err(Error::InvalidEpisode(format!(
                "length {} exceeds buffer capacity {}",
                episode.len(),
                self.capacity
            )));
        }
        let len = episode.len();
        self.starts.push_back(self.total_steps_stored);
        self.episodes.push_back(episode);
        self.stored += len;
        self.total_steps_stored += len as u64;
        while self.stored > self.capacity {
            let old = self
                .episodes
                .pop_front()
                .expect("over capacity implies nonempty");
            self.starts.pop_front();
            self.stored -= old.len();
        }
        Ok(())
    }

    /// Uniform draw over stored transitions: (episode slot, step).
    fn draw(&self, rng: &mut RngHandle) -> (usize, usize) {
        let first = self.starts[0];
        let idx = first + rng.gen_range(0..self.stored as u64);
        let ep = self.starts.partition_point(|&s| s <= idx) - 1;
        (ep, (idx - self.starts[ep]) as usize)
    }

    /// Draws `batch_size` transitions uniformly; each is relabeled with
    /// probability k/(k+1) using the achieved goal of a uniformly chosen step
    /// at or after it in the same episode.
    pub fn sample_her_batch(
        &self,
        batch_size: usize,
        her: HerConfig,
        epsilon: f64,
        rng: &mut RngHandle,
    ) -> Result<Vec<HerSample>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let p = her.relabel_probability();
        let mut batch = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let (ep, step) = self.draw(rng);
            let episode = &self.episodes[ep];
            let mut transition = episode.transitions()[step].clone();
            let mut goal_step = None;
            if her.k > 0 && rng.gen::<f64>() < p {
                let future = rng.gen_range(step..episode.len());
                transition.desired_goal = episode.transitions()[future].achieved_goal.clone();
                transition.reward =
                    sparse_reward(&transition.achieved_goal, &transition.desired_goal, epsilon)?;
                transition.done = transition.reward == 0.0 || step + 1 == episode.len();
                goal_step = Some(future);
            }
            batch.push(HerSample {
                transition,
                step,
                goal_step,
            });
        }
        Ok(batch)
    }

    /// The most recent whole episodes covering `n_steps` transitions, oldest
    /// first. The episode that crosses the `n_steps` boundary is included.
    pub fn recent_slice(&self, n_steps: usize) -> Vec<&Episode> {
        let mut covered = 0;
        let mut taken = 0;
        for ep in self.episodes.iter().rev() {
            if covered >= n_steps {
                break;
            }
            covered += ep.len();
            taken += 1;
        }
        self.episodes
            .iter()
            .skip(self.episodes.len() - taken)
            .collect()
    }
}

impl StateSource for ReplayBuffer {
    fn stored_steps(&self) -> usize {
        self.stored
    }

    fn sample_states(&self, n: usize, rng: &mut RngHandle) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..n)
            .map(|_| {
                let (ep, step) = self.draw(rng);
                let t = &self.episodes[ep].transitions()[step];
                (t.next_state.clone(), t.achieved_goal.clone())
            })
            .collect())
    }
}

/// A frozen set of visited states, e.g. restored from a checkpoint.
#[derive(Clone, Debug, Default)]
pub struct StatePool {
    pub states: Vec<(Vec<f64>, Vec<f64>)>,
}

impl StateSource for StatePool {
    fn stored_steps(&self) -> usize {
        self.states.len()
    }

    fn sample_states(&self, n: usize, rng: &mut RngHandle) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.states.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..n)
            .map(|_| self.states[rng.gen_range(0..self.states.len())].clone())
            .collect())
    }
}
