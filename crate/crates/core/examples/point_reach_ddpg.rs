//! DDPG with HER on the continuous point task, uniform goals.

use ddf_curriculum::harness::{run_method, EnvKind, ExperimentConfig, Method};

fn main() -> ddf_curriculum::Result<()> {
    let mut config = ExperimentConfig::default();
    config.env.kind = EnvKind::PointReach;
    config.experiment.total_env_steps = 20_000;
    config.experiment.eval_every = 2_000;

    let run = run_method(&config, Method::UniformBaseline, 0)?;
    for row in &run.metrics {
        println!(
            "{:>7}  success {:.2}  return {:.1}",
            row.env_steps, row.success_rate, row.mean_return
        );
    }
    Ok(())
}
