use thiserror::Error;

use crate::dataset::DatasetError;
use crate::hpo::SearchError;
use crate::models::ModelError;
use crate::nn::NnError;

/// Top-level error for the pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Dataset(DatasetError::InvalidArgument(_)) => ErrorClass::Config,
            Error::Dataset(_) => ErrorClass::Data,
            Error::Model(ModelError::Layout(_)) => ErrorClass::Data,
            Error::Model(ModelError::Nn(e)) | Error::Nn(e) => nn_class(e),
            Error::Search(SearchError::InvalidSpace(_) | SearchError::InvalidConfig(_)) => ErrorClass::Config,
            Error::Search(_) => ErrorClass::Numerical,
        }
    }
}

fn nn_class(e: &NnError) -> ErrorClass {
    match e {
        NnError::Diverged { .. } => ErrorClass::Numerical,
        NnError::Config(_) => ErrorClass::Config,
        NnError::LayerShape { .. } | NnError::Shape(_) => ErrorClass::Config,
        NnError::EmptyTrainingSet | NnError::EmptyTestSet | NnError::Serialization(_) => ErrorClass::Data,
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
