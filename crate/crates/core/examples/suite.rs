//! Curriculum against the uniform baseline over a few seeds on a small map,
//! with results written as CSV under `target/suite-example`.

use std::path::Path;

use ddf_curriculum::harness::{run_suite, ExperimentConfig, Method};

fn main() -> ddf_curriculum::Result<()> {
    let mut config = ExperimentConfig::default();
    config.env.width = 10;
    config.env.height = 10;
    config.env.door_y = 5;
    config.env.start = [1, 5];
    config.env.horizon = 30;
    config.experiment.total_env_steps = 20_000;
    config.experiment.eval_every = 1_000;
    config.experiment.seeds = vec![0, 1];
    config.ddf.retrain_interval = 2_000;

    let out = Path::new("target/suite-example");
    let result = run_suite(&config, out)?;
    for method in Method::ALL {
        let finals: Vec<String> = result
            .runs_of(method)
            .map(|r| format!("{:.2}", r.final_success()))
            .collect();
        println!(
            "{:<11} final success [{}], median steps to 0.8: {:?}",
            method.tag(),
            finals.join(", "),
            result.median_steps_to(method, 0.8)
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
