use thiserror::Error;

/// Errors raised while loading configuration, generating load, simulating or scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("no cost entry for model `{model}` on unit `{unit}`")]
    MissingCost { model: String, unit: String },

    #[error("invalid model `{model}`: {reason}")]
    InvalidModel { model: String, reason: String },

    #[error("scenario `{scenario}` failed validation: {violations:?}")]
    InvalidScenario {
        scenario: String,
        violations: Vec<String>,
    },

    #[error("scoring error: {0}")]
    Scoring(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
