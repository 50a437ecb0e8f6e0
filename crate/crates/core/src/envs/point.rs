use rand::Rng;

use super::{GoalEnv, Step};
use crate::domain::{sparse_reward, Action, ActionSpace, EnvSpec, Interval};
use crate::error::{Error, Result};
use crate::rng::RngHandle;

/// A point mass in the unit square. Actions are per-axis displacements,
/// clipped to `max_step`; positions are clipped to the arena.
#[derive(Clone, Debug)]
pub struct PointReachEnv {
    start: [f64; 2],
    pos: [f64; 2],
    max_step: f64,
    goal: Option<Vec<f64>>,
    steps: usize,
    done: bool,
    spec: EnvSpec,
}

impl PointReachEnv {
    pub fn new(start: [f64; 2], max_step: f64, horizon: usize, epsilon: f64) -> Result<Self> {
        if !(max_step > 0.0) || !max_step.is_finite() {
            return Err(Error::Spec("max_step must be positive".into()));
        }
        if start.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Spec("start must lie in the unit square".into()));
        }
        let spec = EnvSpec::new(
            2,
            ActionSpace::Continuous {
                low: vec![-max_step; 2],
                high: vec![max_step; 2],
            },
            2,
            horizon,
            epsilon,
            vec![
                Interval {
                    low: 0.0,
                    high: 1.0
                };
                2
            ],
        )?;
        Ok(Self {
            start,
            pos: start,
            max_step,
            goal: None,
            steps: 0,
            done: true,
            spec,
        })
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }
}

impl Default for PointReachEnv {
    fn default() -> Self {
        Self::new([0.1, 0.1], 0.03, 50, 0.05).expect("default point-reach config is valid")
    }
}

impl GoalEnv for PointReachEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, desired_goal: &[f64]) -> Result<Vec<f64>> {
        let goal = self.check_goal(desired_goal)?;
        self.goal = Some(goal);
        self.pos = self.start;
        self.steps = 0;
        self.done = false;
        Ok(self.pos.to_vec())
    }

    fn step(&mut self, action: &Action) -> Result<Step> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let delta = match action {
            Action::Continuous(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => v,
            other => return Err(Error::InvalidAction(format!("{other:?}"))),
        };
        for (p, d) in self.pos.iter_mut().zip(delta) {
            *p = (*p + d.clamp(-self.max_step, self.max_step)).clamp(0.0, 1.0);
        }
        self.steps += 1;
        let next_state = self.pos.to_vec();
        let goal = self.goal.as_ref().ok_or(Error::EpisodeFinished)?;
        let reward = sparse_reward(&next_state, goal, self.spec.epsilon)?;
        self.done = reward == 0.0 || self.steps >= self.spec.horizon;
        Ok(Step {
            achieved_goal: next_state.clone(),
            next_state,
            reward,
            done: self.done,
        })
    }

    fn achieved_goal(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn sample_uniform_goal(&self, rng: &mut RngHandle) -> Vec<f64> {
        vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]
    }

    fn check_goal(&self, goal: &[f64]) -> Result<Vec<f64>> {
        if !self.spec.goal_in_bounds(goal) {
            return Err(Error::InvalidGoal(format!("{goal:?} is outside the arena")));
        }
        Ok(goal.to_vec())
    }

    fn start_state(&self) -> Vec<f64> {
        self.start.to_vec()
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}
