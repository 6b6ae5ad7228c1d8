use augtext::augment::{AugmentError, LexiconError};
use augtext::backends::BackendError;
use augtext::classifier::ClassifierError;
use augtext::corpus::CorpusError;
use augtext::experiments::ExperimentError;
use augtext::filter::FilterError;
use thiserror::Error;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration values.
    #[error("{0}")]
    Usage(String),
    /// A model backend is missing, unreachable or misbehaving.
    #[error("{0}")]
    Backend(String),
    /// Unreadable or invalid input data, models or manifests.
    #[error("{0}")]
    Data(String),
    /// Writing outputs failed.
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Data(_) => 4,
            CliError::Output(_) => 1,
        }
    }

    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            e if e.is_backend() => CliError::Backend(e.to_string()),
            AugmentError::InvalidParams(_) | AugmentError::UnsupportedMethod(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Backend(b) => b.into(),
            FilterError::InvalidKeepFraction(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        if e.is_backend() {
            return CliError::Backend(e.to_string());
        }
        match e.root() {
            ExperimentError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            ExperimentError::Augment(AugmentError::InvalidParams(_)) => CliError::Usage(e.to_string()),
            ExperimentError::Classifier(ClassifierError::InvalidConfig(_)) => CliError::Usage(e.to_string()),
            ExperimentError::Filter(FilterError::InvalidKeepFraction(_)) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
