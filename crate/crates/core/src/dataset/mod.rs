//! RSSI fingerprint data: beacon layouts, labelled and unlabelled samples,
//! CSV ingestion, train/test splitting, per-cell statistics and a synthetic
//! generator used when the surveyed corpus is not available.

mod codec;
mod csv_io;
mod layout;
mod stats;
mod synth;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codec::{decode_location_label, encode_location_label, GRID_COLUMNS, GRID_ROWS};
pub use csv_io::{parse_labelled, parse_unlabelled, write_labelled, write_unlabelled, SOURCE_COLUMN};
pub use layout::{Beacon, BeaconLayout};
pub use stats::{find_underrepresented, sample_histogram, split, split_indices, SampleHistogram, UnderrepresentedCell};
pub use synth::{synth_generate, PathLossModel, SynthSpec};

/// RSSI value recorded when a beacon is not heard at all.
pub const NO_SIGNAL_DBM: f64 = -200.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed location label {label:?}: {reason}")]
    MalformedLabel { label: String, reason: &'static str },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("RSSI value {0} outside [-200, 0]")]
    RssiOutOfRange(f64),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Position on the floor grid, in grid units (one unit is one cell edge).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
}

impl GridPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &GridPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Grid cell containing this point; coordinates on the far edge fall into
    /// the last cell.
    pub fn cell(&self) -> Cell {
        let clamp = |v: f64, n: usize| (v.max(0.0).floor() as usize).min(n - 1);
        Cell { x: clamp(self.x, GRID_COLUMNS), y: clamp(self.y, GRID_ROWS) }
    }
}

/// Integer grid cell `(column, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn center(&self) -> GridPoint {
        GridPoint::new(self.x as f64, self.y as f64)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Per-beacon received signal strengths in dBm, each in `[-200, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RssiVector(Vec<f64>);

impl RssiVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DatasetError> {
        if let Some(&bad) = values.iter().find(|v| !(NO_SIGNAL_DBM..=0.0).contains(*v)) {
            return Err(DatasetError::RssiOutOfRange(bad));
        }
        Ok(Self(values))
    }

    pub fn no_signal(len: usize) -> Self {
        Self(vec![NO_SIGNAL_DBM; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_signal(&self, beacon: usize) -> bool {
        self.0[beacon] > NO_SIGNAL_DBM
    }

    /// Indices of beacons heard in this reading.
    pub fn signal_set(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.0.len()).filter(|&b| self.has_signal(b))
    }

    pub fn is_silent(&self) -> bool {
        self.signal_set().next().is_none()
    }

    /// Values scaled into `[0, 1]` by dividing by -200; no signal maps to 1.
    pub fn normalized(&self) -> Vec<f64> {
        self.0.iter().map(|v| v / NO_SIGNAL_DBM).collect()
    }

    pub(crate) fn set(&mut self, beacon: usize, value: f64) {
        debug_assert!((NO_SIGNAL_DBM..=0.0).contains(&value));
        self.0[beacon] = value;
    }
}

impl TryFrom<Vec<f64>> for RssiVector {
    type Error = DatasetError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<RssiVector> for Vec<f64> {
    fn from(v: RssiVector) -> Self {
        v.0
    }
}

/// Where a labelled sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    #[default]
    Original,
    Naive,
    Autoencoder,
}

impl SampleSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleSource::Original => "original",
            SampleSource::Naive => "naive",
            SampleSource::Autoencoder => "autoencoder",
        }
    }
}

impl fmt::Display for SampleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SampleSource {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(SampleSource::Original),
            "naive" => Ok(SampleSource::Naive),
            "autoencoder" => Ok(SampleSource::Autoencoder),
            other => Err(DatasetError::Schema(format!("unknown sample source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSample {
    pub rssi: RssiVector,
    pub location: GridPoint,
    /// Label as it appeared in the source file, e.g. `"O02"`.
    pub label: String,
    /// Opaque, preserved verbatim.
    pub timestamp: String,
    pub source: SampleSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabelledSample {
    pub rssi: RssiVector,
    pub timestamp: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub layout: BeaconLayout,
    pub labelled: Vec<LabelledSample>,
    pub unlabelled: Vec<UnlabelledSample>,
}

impl Dataset {
    /// Labelled samples that carry no signal from any beacon.
    pub fn silent_labelled(&self) -> usize {
        self.labelled.iter().filter(|s| s.rssi.is_silent()).count()
    }
}
