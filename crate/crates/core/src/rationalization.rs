//! Beacon importance by retraining without each beacon in turn.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split, BeaconLayout, DatasetError, LabelledSample, NO_SIGNAL_DBM};
use crate::error::{Error, Result};
use crate::localizer::fit_and_evaluate;
use crate::models::{ModelKind, ModelOptions};
use crate::nn::TrainConfig;
use crate::seed;

/// Which samples leave the residual set after a beacon is silenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualRule {
    /// Samples heard on the dropped beacon and nothing else.
    #[default]
    SoleSignal,
    /// Every sample left without any signal, including ones that were
    /// silent to begin with.
    NoRemainingSignal,
}

/// Silences `beacon_id` in every sample and removes the samples that were
/// heard on that beacon alone. The input is not modified.
pub fn drop_beacon(samples: &[LabelledSample], layout: &BeaconLayout, beacon_id: &str) -> Result<Vec<LabelledSample>> {
    drop_beacon_with(samples, layout, beacon_id, ResidualRule::SoleSignal)
}

pub fn drop_beacon_with(
    samples: &[LabelledSample],
    layout: &BeaconLayout,
    beacon_id: &str,
    rule: ResidualRule,
) -> Result<Vec<LabelledSample>> {
    let b = layout
        .index_of(beacon_id)
        .ok_or_else(|| DatasetError::InvalidArgument(format!("unknown beacon {beacon_id:?}")))?;
    let removed = |s: &LabelledSample| match rule {
        ResidualRule::SoleSignal => s.rssi.has_signal(b) && s.rssi.signal_set().count() == 1,
        ResidualRule::NoRemainingSignal => s.rssi.signal_set().all(|i| i == b),
    };
    Ok(samples
        .iter()
        .filter(|s| !removed(s))
        .map(|s| {
            let mut s = s.clone();
            s.rssi.set(b, NO_SIGNAL_DBM);
            s
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub model: ModelKind,
    pub options: ModelOptions,
    /// `seed` is overridden by each study seed.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub split_ratio: f64,
    /// Worker threads for per-beacon retraining.
    pub jobs: usize,
    pub residual_rule: ResidualRule,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Dnn,
            options: ModelOptions::default(),
            train: TrainConfig::default(),
            seeds: vec![0, 1, 2, 3, 4],
            split_ratio: 0.8,
            jobs: 1,
            residual_rule: ResidualRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconRecord {
    pub beacon: String,
    pub residual_samples: usize,
    pub mean_error_ft: Option<f64>,
    pub delta_ft: Option<f64>,
    /// Set when retraining failed for this beacon.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutStudyResult {
    pub baseline_ft: f64,
    pub seeds: Vec<u64>,
    /// Layout order.
    pub beacons: Vec<BeaconRecord>,
}

/// Mean test error in feet over the study seeds. For seed `s` the split uses
/// `derive(s, "split")` and training uses seed `s`.
fn mean_error_ft(samples: &[LabelledSample], layout: &BeaconLayout, config: &StudyConfig) -> Result<f64> {
    let mut total = 0.0;
    for &s in &config.seeds {
        let (train, test) = split(samples, config.split_ratio, seed::derive(s, "split"));
        let cfg = TrainConfig { seed: s, ..config.train.clone() };
        let (_, outcome) = fit_and_evaluate(config.model, &config.options, layout, &train, &test, &cfg)?;
        total += outcome.metrics.mean_error_ft;
    }
    Ok(total / config.seeds.len() as f64)
}

pub fn dropout_study(
    samples: &[LabelledSample],
    layout: &BeaconLayout,
    config: &StudyConfig,
) -> Result<DropoutStudyResult> {
    if config.seeds.is_empty() {
        return Err(Error::Config("the study needs at least one seed".into()));
    }
    if config.jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(DatasetError::InvalidArgument("no labelled samples".into()).into());
    }
    let baseline_ft = mean_error_ft(samples, layout, config)?;

    let run = |id: &str| -> BeaconRecord {
        let residual = drop_beacon_with(samples, layout, id, config.residual_rule).expect("id comes from the layout");
        let result = if residual.is_empty() {
            Err("residual dataset is empty".to_owned())
        } else {
            mean_error_ft(&residual, layout, config).map_err(|e| e.to_string())
        };
        let (mean, error) = match result {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e)),
        };
        BeaconRecord {
            beacon: id.to_owned(),
            residual_samples: residual.len(),
            mean_error_ft: mean,
            delta_ft: mean.map(|m| m - baseline_ft),
            error,
        }
    };
    let ids: Vec<&str> = layout.ids().collect();
    let beacons = if config.jobs == 1 {
        ids.iter().map(|id| run(id)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| ids.par_iter().map(|id| run(id)).collect())
    };
    Ok(DropoutStudyResult { baseline_ft, seeds: config.seeds.clone(), beacons })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedBeacon {
    pub beacon: String,
    pub delta_ft: Option<f64>,
    /// Removing the beacon lowered the error.
    pub removal_improves: bool,
}

/// Largest error increase first; ties by beacon id; failed beacons last.
pub fn rank_beacons(result: &DropoutStudyResult) -> Vec<RankedBeacon> {
    let mut ranked: Vec<RankedBeacon> = result
        .beacons
        .iter()
        .map(|r| RankedBeacon {
            beacon: r.beacon.clone(),
            delta_ft: r.delta_ft,
            removal_improves: r.delta_ft.is_some_and(|d| d < 0.0),
        })
        .collect();
    ranked.sort_by(|a, b| match (a.delta_ft, b.delta_ft) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.beacon.cmp(&b.beacon)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.beacon.cmp(&b.beacon),
    });
    ranked
}
