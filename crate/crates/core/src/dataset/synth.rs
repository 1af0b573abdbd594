//! Log-distance path-loss generator for synthetic fingerprint corpora.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    encode_location_label, BeaconLayout, Cell, Dataset, DatasetError, GridPoint, LabelledSample, RssiVector,
    SampleSource, UnlabelledSample, NO_SIGNAL_DBM,
};
use crate::seed;

/// `rssi(d) = P0 - 10 n log10(d / d0) + N(0, noise_std)`, with readings below
/// the detection floor reported as no signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossModel {
    pub reference_power_dbm: f64,
    pub exponent: f64,
    /// Grid units.
    pub reference_distance: f64,
    pub noise_std_db: f64,
    pub detection_floor_dbm: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_power_dbm: -60.0,
            exponent: 2.5,
            reference_distance: 1.0,
            noise_std_db: 2.0,
            detection_floor_dbm: -88.0,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::InvalidArgument(m.to_string()));
        if !(self.exponent > 0.0) {
            return bad("path-loss exponent must be positive");
        }
        if !(self.reference_distance > 0.0) {
            return bad("reference distance must be positive");
        }
        if !(self.noise_std_db >= 0.0) {
            return bad("noise std must be non-negative");
        }
        if !(self.detection_floor_dbm >= NO_SIGNAL_DBM) {
            return bad("detection floor must be at least -200 dBm");
        }
        Ok(())
    }

    /// Noise-free mean RSSI at `distance` grid units. Distances below the
    /// reference distance are floored to it.
    pub fn mean_rssi(&self, distance: f64) -> f64 {
        let d = distance.max(self.reference_distance);
        self.reference_power_dbm - 10.0 * self.exponent * (d / self.reference_distance).log10()
    }

    /// Maps a raw draw to a stored reading: floor cut-off, then clamp.
    pub fn quantize(&self, raw: f64) -> f64 {
        if raw < self.detection_floor_dbm {
            NO_SIGNAL_DBM
        } else {
            raw.clamp(NO_SIGNAL_DBM, 0.0)
        }
    }

    fn sample<R: rand::Rng>(&self, layout: &BeaconLayout, at: GridPoint, rng: &mut R) -> RssiVector {
        let noise = Normal::new(0.0, self.noise_std_db).expect("validated noise std");
        let values = layout
            .beacons
            .iter()
            .map(|b| {
                let d = at.distance(&GridPoint::new(b.x, b.y));
                self.quantize(self.mean_rssi(d) + noise.sample(rng))
            })
            .collect();
        RssiVector::new(values).expect("quantized values lie in range")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub locations: usize,
    pub samples_per_location: usize,
    pub unlabelled: usize,
    pub model: PathLossModel,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { locations: 400, samples_per_location: 5, unlabelled: 2000, model: PathLossModel::default() }
    }
}

/// Draws `locations` distinct grid cells, then `samples_per_location`
/// labelled readings at each cell and `unlabelled` readings at uniformly
/// chosen surveyed cells.
pub fn synth_generate(layout: &BeaconLayout, spec: &SynthSpec, seed: u64) -> Result<Dataset, DatasetError> {
    spec.model.validate()?;
    let [cols, rows] = layout.grid;
    let cells = cols * rows;
    if spec.locations == 0 || spec.samples_per_location == 0 {
        return Err(DatasetError::InvalidArgument("locations and samples per location must be at least 1".into()));
    }
    if spec.locations > cells {
        return Err(DatasetError::InvalidArgument(format!(
            "{} locations requested but the grid has only {cells} cells",
            spec.locations
        )));
    }

    let mut pick = seed::rng(seed::derive(seed, "locations"));
    let mut chosen: Vec<Cell> = index::sample(&mut pick, cells, spec.locations)
        .into_iter()
        .map(|i| Cell { x: i / rows, y: i % rows })
        .collect();
    chosen.sort();

    let mut rng = seed::rng(seed::derive(seed, "labelled"));
    let mut labelled = Vec::with_capacity(spec.locations * spec.samples_per_location);
    for cell in &chosen {
        for _ in 0..spec.samples_per_location {
            labelled.push(LabelledSample {
                rssi: spec.model.sample(layout, cell.center(), &mut rng),
                location: cell.center(),
                label: encode_location_label(*cell),
                timestamp: format!("synthetic-{:06}", labelled.len()),
                source: SampleSource::Original,
            });
        }
    }

    let mut rng = seed::rng(seed::derive(seed, "unlabelled"));
    let unlabelled = (0..spec.unlabelled)
        .map(|i| {
            let cell = chosen[rng.random_range(0..chosen.len())];
            UnlabelledSample {
                rssi: spec.model.sample(layout, cell.center(), &mut rng),
                timestamp: format!("synthetic-u{i:06}"),
            }
        })
        .collect();

    Ok(Dataset { layout: layout.clone(), labelled, unlabelled })
}
