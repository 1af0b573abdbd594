use std::path::PathBuf;

use fingerloc::ErrorClass;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fingerloc::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("input {role} at {} changed since the manifest was written", path.display())]
    InputChanged { role: String, path: PathBuf },
    #[error("replay differs from the manifest in: {}", .0.join(", "))]
    NotReproduced(Vec<String>),
}

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Config(_) => ErrorClass::Config,
            CliError::Read { .. } | CliError::Write { .. } | CliError::InputChanged { .. } => ErrorClass::Data,
            CliError::NotReproduced(_) => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.class())
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

impl From<fingerloc::DatasetError> for CliError {
    fn from(e: fingerloc::DatasetError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        fingerloc::DatasetError::from(e).into()
    }
}

impl From<fingerloc::hpo::SearchError> for CliError {
    fn from(e: fingerloc::hpo::SearchError) -> Self {
        CliError::Core(e.into())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
