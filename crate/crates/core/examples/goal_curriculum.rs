//! Short curriculum run on a small two-room map, printing how far the
//! generated goals sit from the start as training goes on.

use ddf_curriculum::harness::{run_method, ExperimentConfig, Method};

fn main() -> ddf_curriculum::Result<()> {
    let mut config = ExperimentConfig::default();
    config.env.width = 12;
    config.env.height = 12;
    config.env.door_y = 6;
    config.env.start = [1, 6];
    config.env.horizon = 40;
    config.experiment.total_env_steps = 30_000;
    config.experiment.eval_every = 3_000;
    config.experiment.snapshot_every = 3_000;
    config.ddf.retrain_interval = 3_000;
    config.ddf.pairs_per_retrain = 5_000;
    config.validate()?;

    let run = run_method(&config, Method::Curriculum, 0)?;
    println!("{:>8} {:>8} {:>14}", "steps", "success", "goal distance");
    for (row, snap) in run.metrics.iter().zip(&run.snapshots) {
        println!(
            "{:>8} {:>8.2} {:>14.2}",
            row.env_steps,
            row.success_rate,
            snap.mean_distance().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
