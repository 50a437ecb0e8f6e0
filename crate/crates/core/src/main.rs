use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddf_curriculum::harness::{
    inspect_goals, load_checkpoint, run_method, run_suite, steps_to_threshold, write_manifest,
    write_run, write_snapshot_to, ExperimentConfig, Method,
};
use ddf_curriculum::Error;

#[derive(Parser)]
#[command(
    name = "ddf-curriculum",
    version,
    about = "Distance-classifier goal curricula for goal-conditioned RL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and write its metrics and checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["curriculum", "uniform", "uniform_baseline"])]
        method: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curriculum and uniform baseline over every configured seed.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print goals regenerated from a checkpoint as CSV.
    InspectGoals {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> ddf_curriculum::Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            method,
            out,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(m) = method {
                config.experiment.method = m.parse::<Method>()?;
            }
            let seed = seed.unwrap_or(config.experiment.seeds[0]);
            let out = out.unwrap_or_else(|| config.experiment.output_dir.clone());
            let run = run_method(&config, config.experiment.method, seed)?;
            write_manifest(&out, &config)?;
            write_run(&out, &config, &run)?;
            let to_08 = steps_to_threshold(&run.metrics, 0.8, config.experiment.sustain_evals);
            println!(
                "{} seed {seed}: final success {:.2}, steps to 0.8 {}",
                run.method,
                run.final_success(),
                to_08.map_or("never".into(), |s| s.to_string())
            );
        }
        Command::Suite { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let result = run_suite(&config, &out)?;
            for row in result.thresholds.iter().filter(|r| r.seed.is_none()) {
                println!(
                    "{:<10} median steps to {:.1}: {}",
                    row.method,
                    row.threshold,
                    row.env_steps.map_or("never".into(), |s| s.to_string())
                );
            }
        }
        Command::InspectGoals {
            checkpoint,
            n,
            seed,
        } => {
            let ck = load_checkpoint(&checkpoint)?;
            let snapshot = inspect_goals(&ck, n, seed)?;
            write_snapshot_to(std::io::stdout().lock(), &snapshot)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
