//! Walks randomly on the two-room map, then draws a HER batch and shows how
//! many failed transitions relabeling turns into successes.

use rand::Rng;

use ddf_curriculum::domain::{Action, Episode, Transition};
use ddf_curriculum::envs::{GoalEnv, GridNavEnv};
use ddf_curriculum::replay::{HerConfig, ReplayBuffer};
use ddf_curriculum::rng::{streams, RngHandle};

fn main() -> ddf_curriculum::Result<()> {
    let mut env = GridNavEnv::default_two_rooms();
    let mut rng = RngHandle::new(0, streams::ENV);
    let mut buffer = ReplayBuffer::new(10_000, env.spec().horizon);

    for _ in 0..50 {
        let goal = env.sample_uniform_goal(&mut rng);
        let mut state = env.reset(&goal)?;
        let mut transitions = Vec::new();
        loop {
            let action = Action::Discrete(rng.gen_range(0..4));
            let step = env.step(&action)?;
            let done = step.done;
            transitions.push(Transition {
                state: std::mem::replace(&mut state, step.next_state.clone()),
                action,
                next_state: step.next_state,
                achieved_goal: step.achieved_goal,
                desired_goal: goal.clone(),
                reward: step.reward,
                done,
            });
            if done {
                break;
            }
        }
        buffer.push_episode(Episode::new(transitions)?)?;
    }

    let original = buffer
        .episodes()
        .flat_map(|e| e.transitions())
        .filter(|t| t.is_success())
        .count();
    println!("{} transitions stored, {original} successful", buffer.len());

    let batch = buffer.sample_her_batch(1_000, HerConfig { k: 4 }, env.spec().epsilon, &mut rng)?;
    let relabeled = batch.iter().filter(|s| s.goal_step.is_some()).count();
    let successes = batch.iter().filter(|s| s.transition.is_success()).count();
    println!(
        "batch of {}: {relabeled} relabeled, {successes} with reward 0",
        batch.len()
    );
    Ok(())
}
