//! Position regression on top of a network: encodes fingerprints, trains
//! against `(x, y)` grid targets and reports localization error.

use serde::{Deserialize, Serialize};

use crate::dataset::{BeaconLayout, GridPoint, LabelledSample, RssiVector};
use crate::error::{Error, Result};
use crate::models::{build_model, InputEncoder, ModelKind, ModelOptions};
use crate::nn::{self, Metrics, Network, Tensor, TrainConfig, TrainHistory};
use crate::seed;

/// Trained position regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct Localizer {
    kind: ModelKind,
    encoder: InputEncoder,
    network: Network,
    cell_feet: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub history: TrainHistory,
    pub metrics: Metrics,
}

fn encode_all(encoder: &InputEncoder, samples: &[LabelledSample]) -> Vec<Tensor> {
    samples.iter().map(|s| encoder.encode(&s.rssi)).collect()
}

fn targets(samples: &[LabelledSample]) -> Vec<Tensor> {
    samples.iter().map(|s| Tensor::vector(vec![s.location.x, s.location.y])).collect()
}

impl Localizer {
    /// Builds a fresh model seeded from `config.seed` and trains it.
    pub fn fit(
        kind: ModelKind,
        options: &ModelOptions,
        layout: &BeaconLayout,
        train: &[LabelledSample],
        config: &TrainConfig,
    ) -> Result<(Self, TrainHistory)> {
        if kind == ModelKind::Autoencoder {
            return Err(Error::Config("the autoencoder is not a position model".into()));
        }
        config.validate()?;
        let encoder = InputEncoder::for_model(kind, layout, options)?;
        let mut network = build_model(kind, layout, options, seed::derive(config.seed, "init"))?;
        let history = nn::train(&mut network, &encode_all(&encoder, train), &targets(train), config)?;
        let localizer = Self { kind, encoder, network, cell_feet: layout.cell_feet };
        Ok((localizer, history))
    }

    /// Wraps an already trained network.
    pub fn from_network(
        kind: ModelKind,
        options: &ModelOptions,
        layout: &BeaconLayout,
        network: Network,
    ) -> Result<Self> {
        let encoder = InputEncoder::for_model(kind, layout, options)?;
        let expected = build_model(kind, layout, options, 0)?;
        if network.specs() != expected.specs() || network.input_shape() != expected.input_shape() {
            return Err(Error::Config(format!("network does not have the {kind} architecture")));
        }
        Ok(Self { kind, encoder, network, cell_feet: layout.cell_feet })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn predict(&self, rssi: &RssiVector) -> GridPoint {
        let y = self.network.forward(&self.encoder.encode(rssi)).expect("encoder matches network");
        GridPoint::new(y.data()[0], y.data()[1])
    }

    pub fn evaluate(&self, test: &[LabelledSample]) -> Result<Metrics> {
        let truths: Vec<GridPoint> = test.iter().map(|s| s.location).collect();
        Ok(nn::evaluate(&self.network, &encode_all(&self.encoder, test), &truths, self.cell_feet)?)
    }
}

/// Trains on `train` and evaluates on `test`.
pub fn fit_and_evaluate(
    kind: ModelKind,
    options: &ModelOptions,
    layout: &BeaconLayout,
    train: &[LabelledSample],
    test: &[LabelledSample],
    config: &TrainConfig,
) -> Result<(Localizer, FitOutcome)> {
    if test.is_empty() {
        return Err(nn::NnError::EmptyTestSet.into());
    }
    let (localizer, history) = Localizer::fit(kind, options, layout, train, config)?;
    let metrics = localizer.evaluate(test)?;
    Ok((localizer, FitOutcome { history, metrics }))
}

/// Error of always predicting the mean training position.
pub fn centroid_baseline(train: &[LabelledSample], test: &[LabelledSample], cell_feet: f64) -> Result<Metrics> {
    if train.is_empty() {
        return Err(nn::NnError::EmptyTrainingSet.into());
    }
    if test.is_empty() {
        return Err(nn::NnError::EmptyTestSet.into());
    }
    let n = train.len() as f64;
    let centroid = GridPoint::new(
        train.iter().map(|s| s.location.x).sum::<f64>() / n,
        train.iter().map(|s| s.location.y).sum::<f64>() / n,
    );
    let errors = test.iter().map(|s| s.location.distance(&centroid)).collect();
    Ok(Metrics::from_errors(errors, cell_feet))
}
