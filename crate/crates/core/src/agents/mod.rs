//! Goal-conditioned off-policy learners and policy evaluation.

mod ac;
mod q;

pub use ac::{AcAgent, AcConfig};
pub use q::{QAgent, QConfig};

use crate::domain::{sparse_reward, Action, Transition};
use crate::envs::GoalEnv;
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::rng::RngHandle;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateLosses {
    pub critic: f64,
    pub actor: Option<f64>,
}

pub trait Agent {
    /// Chooses an action; `explore = false` is deterministic and consumes no
    /// randomness.
    fn act(
        &self,
        state: &[f64],
        goal: &[f64],
        explore: bool,
        rng: &mut RngHandle,
    ) -> Result<Action>;

    /// One gradient step on a (relabeled) batch.
    fn update(&mut self, batch: &[Transition]) -> Result<UpdateLosses>;

    /// Fraction of the training budget consumed, driving exploration schedules.
    fn set_progress(&mut self, fraction: f64);

    /// Named networks for checkpointing.
    fn networks(&self) -> Vec<(&'static str, &Mlp)>;
}

/// Clamp band for Bellman targets under {0, -1} rewards.
pub(crate) fn value_floor(gamma: f64) -> f64 {
    -1.0 / (1.0 - gamma)
}

pub(crate) fn check_batch(batch: &[Transition]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub success_rate: f64,
    pub mean_return: f64,
}

/// Greedy rollouts, one per goal, on a private copy of `env`.
pub fn evaluate<E: GoalEnv, A: Agent + ?Sized>(
    agent: &A,
    env: &E,
    goals: &[Vec<f64>],
) -> Result<EvalResult> {
    if goals.is_empty() {
        return Ok(EvalResult {
            success_rate: 0.0,
            mean_return: 0.0,
        });
    }
    let mut env = env.clone();
    // never drawn from: greedy actions are deterministic
    let mut rng = RngHandle::new(0, 0);
    let eps = env.spec().epsilon;
    let mut successes = 0;
    let mut total_return = 0.0;
    for goal in goals {
        let mut state = env.reset(goal)?;
        let goal = env.check_goal(goal)?;
        if sparse_reward(&env.achieved_goal(&state), &goal, eps)? == 0.0 {
            successes += 1;
            continue;
        }
        loop {
            let action = agent.act(&state, &goal, false, &mut rng)?;
            let step = env.step(&action)?;
            total_return += step.reward;
            state = step.next_state;
            if step.done {
                if step.reward == 0.0 {
                    successes += 1;
                }
                break;
            }
        }
    }
    Ok(EvalResult {
        success_rate: successes as f64 / goals.len() as f64,
        mean_return: total_return / goals.len() as f64,
    })
}
