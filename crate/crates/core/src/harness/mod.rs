//! Experiment orchestration: the training loop, baseline comparison,
//! multi-seed suites and their CSV outputs.

mod config;
mod output;
mod run;
mod suite;

pub use config::{
    AgentSection, DdfSection, EnvKind, EnvSection, ExperimentConfig, ExperimentSection, Method,
    ReplaySection,
};
pub use output::{
    inspect_goals, load_checkpoint, manifest_text, run_stem, write_checkpoint, write_csv,
    write_manifest, write_run, write_snapshot, write_snapshot_to, Checkpoint, ARTIFACT_NAME,
    ARTIFACT_VERSION,
};
pub use run::{
    build_agent, run_method, run_training, EpisodeRecord, GoalSnapshot, MetricsRow, RunCounters,
    RunOutput, Trainer, CHECKPOINT_POOL_SIZE,
};
pub use suite::{
    aggregate, median_steps, run_suite, run_suite_methods, steps_to_threshold, threshold_table,
    AggregateRow, SuiteResult, ThresholdRow, THRESHOLDS,
};
