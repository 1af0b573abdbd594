//! Labelled-set augmentation for under-represented grid cells.
//!
//! Naive generation draws each beacon uniformly between the smallest and
//! largest reading seen at the cell, but only for beacons heard in every
//! sample there. The autoencoder route reconstructs one existing sample per
//! cell through a network trained on the unlabelled pool and discards any
//! reconstruction that claims signal from a beacon the cell has never heard.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    find_underrepresented, split_indices, BeaconLayout, Cell, LabelledSample, RssiVector, SampleSource, NO_SIGNAL_DBM,
};
use crate::error::{Error, Result};
use crate::models::{build_model, ModelKind, ModelOptions};
use crate::nn::{self, LossKind, Network, OptimizerConfig, Tensor, TrainConfig, TrainHistory};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    /// Cells with fewer samples than this (and at least one) are augmented.
    pub threshold: usize,
    pub per_location: usize,
    pub autoencoder_epochs: usize,
    pub autoencoder_batch_size: usize,
    /// Normalized reconstructions below this count as signal.
    pub tau: f64,
    pub seed: u64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self { threshold: 10, per_location: 1, autoencoder_epochs: 20, autoencoder_batch_size: 100, tau: 0.9, seed: 0 }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.threshold == 0 {
            return Err(Error::Config("augmentation threshold must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.autoencoder_epochs == 0 || self.autoencoder_batch_size == 0 {
            return Err(Error::Config("autoencoder epochs and batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    None,
    Naive,
    Autoencoder,
    Hybrid,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Naive => "naive",
            Strategy::Autoencoder => "autoencoder",
            Strategy::Hybrid => "hybrid",
        }
    }

    pub fn needs_autoencoder(&self) -> bool {
        matches!(self, Strategy::Autoencoder | Strategy::Hybrid)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" => Ok(Strategy::None),
            "naive" => Ok(Strategy::Naive),
            "autoencoder" => Ok(Strategy::Autoencoder),
            "hybrid" => Ok(Strategy::Hybrid),
            other => Err(format!("unknown augmentation strategy {other:?}")),
        }
    }
}

fn cell_seed(root: u64, label: &str, cell: Cell, k: usize) -> u64 {
    seed::derive_indexed(seed::derive_indexed(root, label, (cell.y * 1000 + cell.x) as u64), "copy", k as u64)
}

fn synthetic_sample(template: &LabelledSample, rssi: RssiVector, source: SampleSource) -> LabelledSample {
    LabelledSample {
        rssi,
        location: template.location,
        label: template.label.clone(),
        timestamp: source.as_str().to_owned(),
        source,
    }
}

/// Beacons heard in at least one of `samples`.
fn seen_beacons(samples: &[&LabelledSample], beacons: usize) -> Vec<bool> {
    (0..beacons).map(|b| samples.iter().any(|s| s.rssi.has_signal(b))).collect()
}

/// `per_location` samples for every under-represented cell.
pub fn naive_augment(samples: &[LabelledSample], policy: &AugmentationPolicy) -> Vec<LabelledSample> {
    let mut out = Vec::new();
    for cell in find_underrepresented(samples, policy.threshold) {
        let at: Vec<&LabelledSample> = cell.samples.iter().map(|&i| &samples[i]).collect();
        let beacons = at[0].rssi.len();
        // envelope of each beacon heard in every sample
        let envelope: Vec<Option<(f64, f64)>> = (0..beacons)
            .map(|b| {
                at.iter().all(|s| s.rssi.has_signal(b)).then(|| {
                    at.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                        let v = s.rssi.as_slice()[b];
                        (lo.min(v), hi.max(v))
                    })
                })
            })
            .collect();
        for k in 0..policy.per_location {
            let mut rng = seed::rng(cell_seed(policy.seed, "naive", cell.cell, k));
            let values = envelope
                .iter()
                .map(|e| match *e {
                    Some((lo, hi)) if lo < hi => rng.random_range(lo..=hi),
                    Some((lo, _)) => lo,
                    None => NO_SIGNAL_DBM,
                })
                .collect();
            let rssi = RssiVector::new(values).expect("values come from valid readings");
            out.push(synthetic_sample(at[0], rssi, SampleSource::Naive));
        }
    }
    out
}

/// Trains the reconstruction network on normalized unlabelled vectors with
/// MSE loss and Adam.
pub fn train_autoencoder(
    unlabelled: &[RssiVector],
    layout: &BeaconLayout,
    policy: &AugmentationPolicy,
) -> Result<(Network, TrainHistory)> {
    policy.validate()?;
    if unlabelled.is_empty() {
        return Err(nn::NnError::EmptyTrainingSet.into());
    }
    let mut network = build_model(
        ModelKind::Autoencoder,
        layout,
        &ModelOptions::default(),
        seed::derive(policy.seed, "autoencoder-init"),
    )?;
    let inputs: Vec<Tensor> = unlabelled.iter().map(|v| Tensor::vector(v.normalized())).collect();
    let config = TrainConfig {
        epochs: policy.autoencoder_epochs,
        batch_size: policy.autoencoder_batch_size,
        loss: LossKind::Mse,
        optimizer: OptimizerConfig::adam(),
        seed: seed::derive(policy.seed, "autoencoder-train"),
    };
    let history = nn::train(&mut network, &inputs, &inputs, &config)?;
    Ok((network, history))
}

/// Whether a normalized reconstruction shows signal only on beacons in
/// `seen`.
pub fn passes_filter(seen: &[bool], reconstruction: &[f64], tau: f64) -> bool {
    seen.iter().zip(reconstruction).all(|(&s, &v)| s || v >= tau)
}

/// Converts a normalized reconstruction to dBm. Entries at or above `tau`
/// are treated as silence.
pub fn reconstruction_to_rssi(reconstruction: &[f64], tau: f64) -> RssiVector {
    let values = reconstruction
        .iter()
        .map(|&v| if v >= tau { NO_SIGNAL_DBM } else { (v * NO_SIGNAL_DBM).clamp(NO_SIGNAL_DBM, 0.0) })
        .collect();
    RssiVector::new(values).expect("clamped")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardedCandidate {
    pub cell: Cell,
    pub rssi: RssiVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AutoencoderOutcome {
    pub kept: Vec<LabelledSample>,
    pub discarded: Vec<DiscardedCandidate>,
}

/// Reconstructs the first sample (then the next ones, cyclically, when
/// `per_location > 1`) of each under-represented cell.
pub fn autoencoder_augment(
    samples: &[LabelledSample],
    autoencoder: &Network,
    policy: &AugmentationPolicy,
) -> Result<AutoencoderOutcome> {
    let mut outcome = AutoencoderOutcome::default();
    for cell in find_underrepresented(samples, policy.threshold) {
        let at: Vec<&LabelledSample> = cell.samples.iter().map(|&i| &samples[i]).collect();
        let seen = seen_beacons(&at, at[0].rssi.len());
        for k in 0..policy.per_location {
            let source = at[k % at.len()];
            let out = autoencoder.forward(&Tensor::vector(source.rssi.normalized()))?;
            let rssi = reconstruction_to_rssi(out.data(), policy.tau);
            if passes_filter(&seen, out.data(), policy.tau) {
                outcome.kept.push(synthetic_sample(at[0], rssi, SampleSource::Autoencoder));
            } else {
                outcome.discarded.push(DiscardedCandidate { cell: cell.cell, rssi });
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AugmentCounts {
    pub original: usize,
    pub naive: usize,
    pub kept: usize,
    pub discarded: usize,
}

impl AugmentCounts {
    pub fn total(&self) -> usize {
        self.original + self.naive + self.kept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSet {
    /// Originals first, then naive, then autoencoder samples.
    pub samples: Vec<LabelledSample>,
    pub counts: AugmentCounts,
}

/// Runs `strategy`. `autoencoder` is required for the autoencoder and
/// hybrid strategies.
pub fn augment(
    samples: &[LabelledSample],
    strategy: Strategy,
    autoencoder: Option<&Network>,
    policy: &AugmentationPolicy,
) -> Result<AugmentedSet> {
    policy.validate()?;
    let naive = match strategy {
        Strategy::Naive | Strategy::Hybrid => naive_augment(samples, policy),
        _ => Vec::new(),
    };
    let ae = if strategy.needs_autoencoder() {
        let net = autoencoder.ok_or_else(|| Error::Config(format!("strategy {strategy} needs an autoencoder")))?;
        autoencoder_augment(samples, net, policy)?
    } else {
        AutoencoderOutcome::default()
    };
    let counts = AugmentCounts {
        original: samples.len(),
        naive: naive.len(),
        kept: ae.kept.len(),
        discarded: ae.discarded.len(),
    };
    let mut all = samples.to_vec();
    all.extend(naive);
    all.extend(ae.kept);
    Ok(AugmentedSet { samples: all, counts })
}

/// Originals plus naive plus kept autoencoder samples.
pub fn hybrid_augment(
    samples: &[LabelledSample],
    autoencoder: &Network,
    policy: &AugmentationPolicy,
) -> Result<AugmentedSet> {
    augment(samples, Strategy::Hybrid, Some(autoencoder), policy)
}

/// How augmentation interacts with the train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Split the originals, then augment the training part only.
    #[default]
    SplitThenAugment,
    /// Augment the whole labelled set, then split the pool.
    PoolThenSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub train: Vec<LabelledSample>,
    pub test: Vec<LabelledSample>,
    pub counts: AugmentCounts,
}

pub fn prepare_split(
    samples: &[LabelledSample],
    strategy: Strategy,
    autoencoder: Option<&Network>,
    policy: &AugmentationPolicy,
    protocol: Protocol,
    ratio: f64,
    split_seed: u64,
) -> Result<PreparedSplit> {
    let pick = |items: &[LabelledSample], idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    match protocol {
        Protocol::SplitThenAugment => {
            let (tr, te) = split_indices(samples.len(), ratio, split_seed);
            let train = pick(samples, &tr);
            let augmented = augment(&train, strategy, autoencoder, policy)?;
            Ok(PreparedSplit { train: augmented.samples, test: pick(samples, &te), counts: augmented.counts })
        }
        Protocol::PoolThenSplit => {
            let augmented = augment(samples, strategy, autoencoder, policy)?;
            let (tr, te) = split_indices(augmented.samples.len(), ratio, split_seed);
            Ok(PreparedSplit {
                train: pick(&augmented.samples, &tr),
                test: pick(&augmented.samples, &te),
                counts: augmented.counts,
            })
        }
    }
}
