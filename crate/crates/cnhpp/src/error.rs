use thiserror::Error;

/// Errors produced by network construction, data ingestion, model
/// evaluation, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("network: {0}")]
    Network(String),

    #[error("panel: {0}")]
    Panel(String),

    #[error("events: {0}")]
    Events(String),

    #[error("model: {0}")]
    Model(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
