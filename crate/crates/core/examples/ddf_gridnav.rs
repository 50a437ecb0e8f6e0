//! Trains the distance classifier on random walks and compares its bins with
//! shortest-path distances from the start cell.

use rand::seq::SliceRandom;
use rand::Rng;

use ddf_curriculum::ddf::{build_pair_dataset, train_ddf, BinSpec, DdfTrainConfig};
use ddf_curriculum::domain::{Action, Episode, Transition};
use ddf_curriculum::envs::{Cell, GoalEnv, GridNavEnv};
use ddf_curriculum::rng::{streams, RngHandle};

fn walk(env: &mut GridNavEnv, rng: &mut RngHandle) -> ddf_curriculum::Result<Episode> {
    let goal = env.sample_uniform_goal(rng);
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
            return Episode::new(transitions);
        }
    }
}

fn main() -> ddf_curriculum::Result<()> {
    let base = GridNavEnv::default_two_rooms();
    let mut rng = RngHandle::new(0, streams::DDF);
    let free = base.free_cells().to_vec();

    let mut walks = Vec::new();
    for _ in 0..2_000 {
        let start = *free.choose(&mut rng).expect("free cells");
        walks.push(walk(&mut base.with_start(start)?, &mut rng)?);
    }
    let spec = BinSpec::new(50, 5)?;
    let mut data = build_pair_dataset(&walks, 5, &spec, &mut rng)?;
    data.shuffle(&mut rng);
    let (held_out, train) = data.split_at(1_000);
    let (model, report) = train_ddf(
        2,
        &[128, 128],
        spec,
        train,
        &DdfTrainConfig::default(),
        &mut rng,
    )?;
    println!("final loss {:.3}", report.final_loss);
    println!(
        "held-out accuracy {:.3}, within one bin {:.3}",
        model.accuracy(held_out, 0)?,
        model.accuracy(held_out, 1)?
    );

    let s0 = base.encode(base.start());
    println!("{:>6} {:>5} {:>9}", "cell", "bfs", "predicted");
    for cell in [
        Cell::new(3, 10),
        Cell::new(6, 12),
        Cell::new(9, 4),
        Cell::new(12, 10),
        Cell::new(18, 18),
    ] {
        let bfs = base
            .oracle_distance(base.start(), cell)?
            .expect("connected map");
        let (bin, _) = model.predict_bin(&s0, &base.encode(cell))?;
        println!("{:>6} {bfs:>5} {bin:>9}", cell.to_string());
    }
    Ok(())
}
