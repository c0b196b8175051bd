//! Error classification for process exit codes:
//! 0 success, 2 configuration, 3 data, 4 numeric.

use har_core::dataset::DatasetError;
use har_core::hrc::HrcError;
use har_core::ingest::IngestError;
use har_core::model::ModelError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) | ModelError::InputShape(_) => CliError::Config(e.to_string()),
            ModelError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            ModelError::Dataset(_) | ModelError::Checkpoint(_) | ModelError::Io(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::TooFewRecordings { .. } => CliError::Config(e.to_string()),
            DatasetError::Preprocess(_) | DatasetError::Synth(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<HrcError> for CliError {
    fn from(e: HrcError) -> Self {
        match e {
            HrcError::BadSchedule(_) => CliError::Config(e.to_string()),
            HrcError::Model(m) => m.into(),
            HrcError::Timeout { .. } => CliError::Data(e.to_string()),
            HrcError::Window(_) | HrcError::Preprocess(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<har_core::eval::EvalError> for CliError {
    fn from(e: har_core::eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<har_core::synth::SynthError> for CliError {
    fn from(e: har_core::synth::SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}
