//! Types shared by every module: environment descriptions, transitions,
//! episodes, and the sparse goal-reaching reward.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ActionSpace {
    Discrete { count: usize },
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    /// Width of the input an agent's network sees for an action.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { .. } => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub goal_dim: usize,
    /// Maximum episode length in steps.
    pub horizon: usize,
    /// Success radius in goal space.
    pub epsilon: f64,
    pub goal_bounds: Vec<Interval>,
}

impl EnvSpec {
    pub fn new(
        state_dim: usize,
        action_space: ActionSpace,
        goal_dim: usize,
        horizon: usize,
        epsilon: f64,
        goal_bounds: Vec<Interval>,
    ) -> Result<Self> {
        if state_dim == 0 || goal_dim == 0 {
            return Err(Error::Spec("state and goal dims must be positive".into()));
        }
        if horizon == 0 {
            return Err(Error::Spec("horizon must be at least 1".into()));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::Spec("epsilon must be non-negative".into()));
        }
        if goal_bounds.len() != goal_dim {
            return Err(Error::Dimension {
                expected: goal_dim,
                got: goal_bounds.len(),
            });
        }
        if goal_bounds.iter().any(|b| !(b.low < b.high)) {
            return Err(Error::Spec("goal bounds must satisfy low < high".into()));
        }
        match &action_space {
            ActionSpace::Discrete { count } if *count == 0 => {
                return Err(Error::Spec("discrete action space is empty".into()))
            }
            ActionSpace::Continuous { low, high } => {
                if low.is_empty() || low.len() != high.len() {
                    return Err(Error::Spec("continuous action bounds malformed".into()));
                }
                if low.iter().zip(high).any(|(l, h)| !(l < h)) {
                    return Err(Error::Spec("action bounds must satisfy low < high".into()));
                }
            }
            _ => {}
        }
        Ok(Self {
            state_dim,
            action_space,
            goal_dim,
            horizon,
            epsilon,
            goal_bounds,
        })
    }

    pub fn goal_in_bounds(&self, goal: &[f64]) -> bool {
        goal.len() == self.goal_dim
            && goal
                .iter()
                .zip(&self.goal_bounds)
                .all(|(g, b)| g.is_finite() && *g >= b.low && *g <= b.high)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub next_state: Vec<f64>,
    /// Goal realised at `next_state`.
    pub achieved_goal: Vec<f64>,
    pub desired_goal: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

impl Transition {
    pub fn is_success(&self) -> bool {
        self.reward == 0.0
    }
}

/// An ordered, chained trajectory. Always holds at least one transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    transitions: Vec<Transition>,
}

impl Episode {
    pub fn new(transitions: Vec<Transition>) -> Result<Self> {
        let Some(first) = transitions.first() else {
            return Err(Error::InvalidEpisode("episode has no transitions".into()));
        };
        for pair in transitions.windows(2) {
            if pair[0].next_state != pair[1].state {
                return Err(Error::InvalidEpisode(
                    "next_state does not chain into the following state".into(),
                ));
            }
        }
        if transitions
            .iter()
            .any(|t| t.desired_goal != first.desired_goal)
        {
            return Err(Error::InvalidEpisode(
                "transitions disagree on the desired goal".into(),
            ));
        }
        Ok(Self { transitions })
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn desired_goal(&self) -> &[f64] {
        &self.transitions[0].desired_goal
    }

    /// The visited state sequence `s_0 .. s_len` (one longer than the episode).
    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        std::iter::once(self.transitions[0].state.as_slice())
            .chain(self.transitions.iter().map(|t| t.next_state.as_slice()))
    }

    pub fn state(&self, index: usize) -> &[f64] {
        if index == 0 {
            &self.transitions[0].state
        } else {
            &self.transitions[index - 1].next_state
        }
    }

    pub fn reached_goal(&self) -> bool {
        self.transitions.last().is_some_and(Transition::is_success)
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Euclidean distance between two goals.
pub fn goal_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// 0 when `achieved` lies strictly within `epsilon` of `desired`, −1 otherwise.
pub fn sparse_reward(achieved: &[f64], desired: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::Spec("epsilon must be non-negative".into()));
    }
    let d = goal_distance(achieved, desired)?;
    Ok(if d < epsilon { 0.0 } else { -1.0 })
}

/// Concatenates slices into one input row.
pub(crate) fn concat(parts: &[&[f64]]) -> Vec<f64> {
    let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}
