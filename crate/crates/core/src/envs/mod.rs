//! Goal-conditioned environments.
//!
//! Both environments reset to a fixed start state, so "distance from the
//! initial state" means the same thing in every episode.

mod grid;
mod point;

pub use grid::{Cell, GridNavEnv, GRID_ACTIONS};
pub use point::PointReachEnv;

use crate::domain::{Action, EnvSpec};
use crate::error::Result;
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next_state: Vec<f64>,
    pub achieved_goal: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait GoalEnv: Clone {
    fn spec(&self) -> &EnvSpec;

    /// Puts the agent back at the start location and stores `desired_goal`.
    fn reset(&mut self, desired_goal: &[f64]) -> Result<Vec<f64>>;

    fn step(&mut self, action: &Action) -> Result<Step>;

    /// Projection of a state into goal space.
    fn achieved_goal(&self, state: &[f64]) -> Vec<f64>;

    fn sample_uniform_goal(&self, rng: &mut RngHandle) -> Vec<f64>;

    /// Validates a goal and returns its canonical form.
    fn check_goal(&self, goal: &[f64]) -> Result<Vec<f64>>;

    fn start_state(&self) -> Vec<f64>;

    fn steps_taken(&self) -> usize;

    /// Shortest-path oracle access, when the environment has one.
    fn as_grid(&self) -> Option<&GridNavEnv> {
        None
    }
}
