use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid goal: {0}")]
    InvalidGoal(String),

    #[error("invalid cell ({0}, {1})")]
    InvalidCell(i64, i64),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("invalid episode: {0}")]
    InvalidEpisode(String),

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("cannot split horizon {horizon} into {bins} geometric bins")]
    InfeasibleBinning { horizon: usize, bins: usize },

    #[error("distance {steps} exceeds horizon {horizon}")]
    OutOfRange { steps: usize, horizon: usize },

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("invalid map: {0}")]
    Map(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
