//! RSSI-fingerprint indoor localization: dataset handling, a small `f64`
//! neural-network engine, DNN/CNN position regressors, hyperparameter
//! search, labelled-set augmentation and beacon importance studies.

pub mod augmentation;
pub mod cdf;
pub mod dataset;
pub mod digest;
pub mod error;
pub mod hpo;
pub mod localizer;
pub mod models;
pub mod nn;
pub mod rationalization;
pub mod seed;

pub use augmentation::{
    augment, autoencoder_augment, hybrid_augment, naive_augment, prepare_split, train_autoencoder, AugmentCounts,
    AugmentationPolicy, AugmentedSet, PreparedSplit, Protocol, Strategy,
};
pub use cdf::ErrorCdf;
pub use dataset::{
    BeaconLayout, Dataset, DatasetError, GridPoint, LabelledSample, RssiVector, SampleSource, UnlabelledSample,
    NO_SIGNAL_DBM,
};
pub use error::{Error, ErrorClass, Result};
pub use hpo::{Algorithm, ExperimentConfig, ExperimentResult, ExperimentSpec, SearchSpace, Trial, TrialStatus};
pub use localizer::{centroid_baseline, fit_and_evaluate, FitOutcome, Localizer};
pub use models::{build_model, ImageCodec, ModelKind, ModelOptions, NoSignalPixel};
pub use nn::{LossKind, Metrics, Network, OptimizerConfig, TrainConfig, TrainHistory};
pub use rationalization::{
    drop_beacon, drop_beacon_with, dropout_study, rank_beacons, DropoutStudyResult, ResidualRule, StudyConfig,
};
