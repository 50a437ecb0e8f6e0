//! Trains briefly, writes a checkpoint, reloads it and samples goals from
//! the restored distance model.

use ddf_curriculum::harness::{
    inspect_goals, load_checkpoint, run_method, run_stem, write_run, write_snapshot_to,
    ExperimentConfig, Method,
};

fn main() -> ddf_curriculum::Result<()> {
    let mut config = ExperimentConfig::default();
    config.experiment.total_env_steps = 12_000;
    config.experiment.eval_every = 4_000;

    let dir = std::env::temp_dir().join("ddf-curriculum-example");
    let run = run_method(&config, Method::Curriculum, 3)?;
    write_run(&dir, &config, &run)?;

    let ck = load_checkpoint(&dir.join(format!("checkpoint_{}", run_stem(Method::Curriculum, 3))))?;
    let snapshot = inspect_goals(&ck, 10, 0)?;
    write_snapshot_to(std::io::stdout().lock(), &snapshot)?;
    Ok(())
}
