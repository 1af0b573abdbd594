//! Black-box hyperparameter search: grid, random and Gaussian-process
//! Bayesian optimization with expected improvement, under a trial budget
//! and an optional early-stop goal.

mod experiment;
mod gp;
mod space;
mod suggest;

use thiserror::Error;

pub use experiment::{
    run_experiment, run_search, write_trials_csv, ExperimentConfig, ExperimentResult, ExperimentSpec, Trial,
    TrialStatus,
};
pub use gp::{expected_improvement, gp_fit, GpSurrogate, KernelParams};
pub use space::{bind_assignment, ParamRange, SearchSpace, BINDABLE_PARAMS};
pub use suggest::{Algorithm, Suggester, BAYES_CANDIDATES, BAYES_WARMUP};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("all {trials} trials diverged")]
    ExperimentFailed { trials: usize },
}
