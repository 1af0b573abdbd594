//! Model architectures and the input encodings they consume.
//!
//! - DNN: `beacons -> 50 -> 50 -> 50 -> 2`, ReLU.
//! - CNN: fingerprint image `[1, rows, cols]` -> Conv(12, 7x7) -> ReLU ->
//!   MaxPool(3) -> Conv(12, 5x5) -> ReLU -> Flatten -> Dense(24) -> ReLU ->
//!   Dense(2). On the 25x25 grid the flattened conv output is 2x2x12 = 48
//!   and the network has 5438 parameters.
//! - Autoencoder: `beacons -> 8 -> 4 -> 8 -> beacons`, ReLU hidden, sigmoid
//!   output, over RSSI vectors normalized by -200.
//!
//! The fingerprint image is all zeros except at beacon pixels, which hold
//! `rssi / -200`. Taken literally this makes a silent beacon (-200 dBm) the
//! brightest pixel, 1.0; [`NoSignalPixel::Zero`] leaves silent beacons dark
//! instead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{BeaconLayout, RssiVector, NO_SIGNAL_DBM};
use crate::nn::{LayerSpec, Network, NnError, Tensor};
use crate::seed;

pub const DNN_HIDDEN: [usize; 3] = [50, 50, 50];
pub const CNN_FILTERS: [usize; 2] = [12, 12];
pub const CNN_KERNELS: [[usize; 2]; 2] = [[7, 7], [5, 5]];
pub const CNN_DENSE: usize = 24;
pub const AUTOENCODER_HIDDEN: [usize; 3] = [8, 4, 8];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("layout error: {0}")]
    Layout(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Dnn,
    Cnn,
    Autoencoder,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::Cnn => "cnn",
            ModelKind::Autoencoder => "autoencoder",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dnn" => Ok(ModelKind::Dnn),
            "cnn" => Ok(ModelKind::Cnn),
            "autoencoder" => Ok(ModelKind::Autoencoder),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoSignalPixel {
    /// Pixel = -200 / -200 = 1.0.
    #[default]
    Literal,
    /// Silent beacons stay at 0.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    /// Max-pool window after the first convolution.
    pub first_pool: Option<usize>,
    /// Max-pool window after the second convolution.
    pub second_pool: Option<usize>,
    pub no_signal_pixel: NoSignalPixel,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { first_pool: Some(3), second_pool: None, no_signal_pixel: NoSignalPixel::Literal }
    }
}

/// Input shape and layer stack for `kind` on `layout`.
pub fn architecture(
    kind: ModelKind,
    layout: &BeaconLayout,
    options: &ModelOptions,
) -> Result<(Vec<usize>, Vec<LayerSpec>), ModelError> {
    let beacons = layout.len();
    let dense = |inputs, outputs| LayerSpec::Dense { inputs, outputs };
    Ok(match kind {
        ModelKind::Dnn => {
            let mut specs = Vec::new();
            let mut width = beacons;
            for h in DNN_HIDDEN {
                specs.push(dense(width, h));
                specs.push(LayerSpec::Relu);
                width = h;
            }
            specs.push(dense(width, 2));
            (vec![beacons], specs)
        }
        ModelKind::Autoencoder => {
            let mut specs = Vec::new();
            let mut width = beacons;
            for h in AUTOENCODER_HIDDEN {
                specs.push(dense(width, h));
                specs.push(LayerSpec::Relu);
                width = h;
            }
            specs.push(dense(width, beacons));
            specs.push(LayerSpec::Sigmoid);
            (vec![beacons], specs)
        }
        ModelKind::Cnn => {
            let [cols, rows] = layout.grid;
            let input = vec![1, rows, cols];
            let mut specs = Vec::new();
            let mut channels = 1;
            let mut shape = input.clone();
            let pools = [options.first_pool, options.second_pool];
            for ((filters, kernel), pool) in CNN_FILTERS.into_iter().zip(CNN_KERNELS).zip(pools) {
                specs.push(LayerSpec::Conv2d { in_channels: channels, out_channels: filters, kernel });
                specs.push(LayerSpec::Relu);
                if let Some(window) = pool {
                    specs.push(LayerSpec::MaxPool2d { window });
                }
                channels = filters;
            }
            specs.push(LayerSpec::Flatten);
            for spec in &specs {
                shape = spec
                    .output_shape(&shape)
                    .map_err(|m| ModelError::Layout(format!("{}x{} grid too small for the CNN: {m}", cols, rows)))?;
            }
            specs.push(dense(shape[0], CNN_DENSE));
            specs.push(LayerSpec::Relu);
            specs.push(dense(CNN_DENSE, 2));
            (input, specs)
        }
    })
}

/// Freshly initialized network for `kind`.
pub fn build_model(
    kind: ModelKind,
    layout: &BeaconLayout,
    options: &ModelOptions,
    seed: u64,
) -> Result<Network, ModelError> {
    let (input, specs) = architecture(kind, layout, options)?;
    Ok(Network::build(input, &specs, &mut seed::rng(seed))?)
}

/// Maps RSSI vectors to single-channel fingerprint images and back.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCodec {
    cols: usize,
    rows: usize,
    /// Flat pixel index of each beacon.
    pixels: Vec<usize>,
    no_signal: NoSignalPixel,
}

impl ImageCodec {
    /// Beacon coordinates are rounded to the nearest pixel; two beacons
    /// sharing a pixel is an error.
    pub fn new(layout: &BeaconLayout, no_signal: NoSignalPixel) -> Result<Self, ModelError> {
        let [cols, rows] = layout.grid;
        let mut pixels = Vec::with_capacity(layout.len());
        for b in &layout.beacons {
            let x = (b.x.round() as usize).min(cols - 1);
            let y = (b.y.round() as usize).min(rows - 1);
            let p = y * cols + x;
            if let Some(other) = pixels.iter().position(|&q| q == p) {
                return Err(ModelError::Layout(format!(
                    "beacons {} and {} share pixel ({x}, {y})",
                    layout.beacons[other].id, b.id
                )));
            }
            pixels.push(p);
        }
        Ok(Self { cols, rows, pixels, no_signal })
    }

    pub fn shape(&self) -> [usize; 3] {
        [1, self.rows, self.cols]
    }

    /// Pixel `(x, y)` of each beacon.
    pub fn beacon_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels.iter().map(|p| (p % self.cols, p / self.cols))
    }

    pub fn encode(&self, rssi: &RssiVector) -> Tensor {
        assert_eq!(rssi.len(), self.pixels.len(), "RSSI vector does not match layout");
        let mut image = vec![0.0; self.rows * self.cols];
        for (&p, &v) in self.pixels.iter().zip(rssi.as_slice()) {
            image[p] = match self.no_signal {
                NoSignalPixel::Zero if v <= NO_SIGNAL_DBM => 0.0,
                _ => v / NO_SIGNAL_DBM,
            };
        }
        Tensor::new(self.shape().to_vec(), image).expect("image shape")
    }

    /// Reads the beacon pixels back as dBm, clamped to `[-200, 0]`.
    pub fn decode(&self, image: &Tensor) -> RssiVector {
        assert_eq!(image.shape(), self.shape().as_slice(), "image shape does not match codec");
        let values = self
            .pixels
            .iter()
            .map(|&p| {
                let px = image.data()[p];
                match self.no_signal {
                    NoSignalPixel::Zero if px <= 0.0 => NO_SIGNAL_DBM,
                    _ => (px * NO_SIGNAL_DBM).clamp(NO_SIGNAL_DBM, 0.0),
                }
            })
            .collect();
        RssiVector::new(values).expect("clamped values lie in range")
    }
}

/// Converts RSSI vectors into network inputs for a model kind.
#[derive(Debug, Clone, PartialEq)]
pub enum InputEncoder {
    /// `rssi / -200`, one entry per beacon.
    Vector,
    Image(ImageCodec),
}

impl InputEncoder {
    pub fn for_model(kind: ModelKind, layout: &BeaconLayout, options: &ModelOptions) -> Result<Self, ModelError> {
        Ok(match kind {
            ModelKind::Cnn => InputEncoder::Image(ImageCodec::new(layout, options.no_signal_pixel)?),
            ModelKind::Dnn | ModelKind::Autoencoder => InputEncoder::Vector,
        })
    }

    pub fn encode(&self, rssi: &RssiVector) -> Tensor {
        match self {
            InputEncoder::Vector => Tensor::vector(rssi.normalized()),
            InputEncoder::Image(codec) => codec.encode(rssi),
        }
    }
}
