use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

/// Layer kinds. Spatial layers take `[channels, height, width]` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
    },
    /// Valid padding, stride 1.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
    },
    /// Non-overlapping window, trailing rows/columns that do not fill a
    /// window are dropped.
    MaxPool2d {
        window: usize,
    },
    Relu,
    Sigmoid,
    Flatten,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "max_pool2d",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Flatten => "flatten",
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                if input != [inputs] {
                    return Err(format!("expects input [{inputs}], got {input:?}"));
                }
                if outputs == 0 {
                    return Err("needs at least one output".into());
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel: [kh, kw] } => match *input {
                [c, h, w] if c == in_channels && h >= kh && w >= kw && kh > 0 && kw > 0 => {
                    if out_channels == 0 {
                        return Err("needs at least one output channel".into());
                    }
                    Ok(vec![out_channels, h - kh + 1, w - kw + 1])
                }
                _ => Err(format!("expects [{in_channels}, >={kh}, >={kw}] input, got {input:?}")),
            },
            LayerSpec::MaxPool2d { window } => match *input {
                [c, h, w] if window > 0 && h >= window && w >= window => Ok(vec![c, h / window, w / window]),
                _ => Err(format!("window {window} does not fit input {input:?}")),
            },
            LayerSpec::Relu | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    pub fn weight_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, outputs } => inputs * outputs,
            LayerSpec::Conv2d { in_channels, out_channels, kernel: [kh, kw] } => in_channels * out_channels * kh * kw,
            _ => 0,
        }
    }

    pub fn bias_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } => outputs,
            LayerSpec::Conv2d { out_channels, .. } => out_channels,
            _ => 0,
        }
    }

    pub fn has_params(&self) -> bool {
        self.weight_count() > 0
    }

    fn fans(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { inputs, outputs } => (inputs, outputs),
            LayerSpec::Conv2d { in_channels, out_channels, kernel: [kh, kw] } => {
                (in_channels * kh * kw, out_channels * kh * kw)
            }
            _ => (0, 0),
        }
    }
}

/// A layer bound to a concrete input shape, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Layer {
    /// Zero-initialized layer.
    pub fn new(spec: LayerSpec, input_shape: &[usize]) -> Result<Self, String> {
        let output_shape = spec.output_shape(input_shape)?;
        Ok(Self {
            weights: vec![0.0; spec.weight_count()],
            bias: vec![0.0; spec.bias_count()],
            spec,
            input_shape: input_shape.to_vec(),
            output_shape,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(&mut self, rng: &mut Rng) {
        let (fan_in, fan_out) = self.spec.fans();
        if fan_in + fan_out == 0 {
            return;
        }
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in &mut self.weights {
            *w = rng.random_range(-limit..limit);
        }
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self.spec {
            LayerSpec::Dense { inputs, outputs } => (0..outputs)
                .map(|o| {
                    let row = &self.weights[o * inputs..(o + 1) * inputs];
                    self.bias[o] + dot(row, x)
                })
                .collect(),
            LayerSpec::Conv2d { in_channels, out_channels, kernel: [kh, kw] } => {
                let (h, w) = (self.input_shape[1], self.input_shape[2]);
                let (oh, ow) = (self.output_shape[1], self.output_shape[2]);
                let mut y = vec![0.0; out_channels * oh * ow];
                for o in 0..out_channels {
                    y[o * oh * ow..(o + 1) * oh * ow].fill(self.bias[o]);
                }
                // scatter each non-zero input; fingerprint images and ReLU
                // outputs are mostly zeros
                for c in 0..in_channels {
                    for p in 0..h {
                        for q in 0..w {
                            let v = x[(c * h + p) * w + q];
                            if v == 0.0 {
                                continue;
                            }
                            for_each_tap(p, q, kh, kw, oh, ow, |ki, kj, i, j| {
                                for o in 0..out_channels {
                                    y[(o * oh + i) * ow + j] +=
                                        self.weights[((o * in_channels + c) * kh + ki) * kw + kj] * v;
                                }
                            });
                        }
                    }
                }
                y
            }
            LayerSpec::MaxPool2d { window } => {
                let (c, w) = (self.input_shape[0], self.input_shape[2]);
                let h = self.input_shape[1];
                let (oh, ow) = (self.output_shape[1], self.output_shape[2]);
                let mut y = Vec::with_capacity(c * oh * ow);
                for ch in 0..c {
                    for i in 0..oh {
                        for j in 0..ow {
                            let idx = argmax_in_window(x, ch * h * w, w, i * window, j * window, window);
                            y.push(x[idx]);
                        }
                    }
                }
                y
            }
            LayerSpec::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
            LayerSpec::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
            LayerSpec::Flatten => x.to_vec(),
        }
    }

    /// Accumulates parameter gradients into `gw`/`gb` and returns the input
    /// gradient when `want_input_grad` is set.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        y: &[f64],
        gy: &[f64],
        gw: &mut [f64],
        gb: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        match self.spec {
            LayerSpec::Dense { inputs, outputs } => {
                for o in 0..outputs {
                    let g = gy[o];
                    gb[o] += g;
                    if g != 0.0 {
                        axpy(g, x, &mut gw[o * inputs..(o + 1) * inputs]);
                    }
                }
                want_input_grad.then(|| {
                    let mut gx = vec![0.0; inputs];
                    for o in 0..outputs {
                        if gy[o] != 0.0 {
                            axpy(gy[o], &self.weights[o * inputs..(o + 1) * inputs], &mut gx);
                        }
                    }
                    gx
                })
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel: [kh, kw] } => {
                let (h, w) = (self.input_shape[1], self.input_shape[2]);
                let (oh, ow) = (self.output_shape[1], self.output_shape[2]);
                for o in 0..out_channels {
                    gb[o] += gy[o * oh * ow..(o + 1) * oh * ow].iter().sum::<f64>();
                }
                for c in 0..in_channels {
                    for p in 0..h {
                        for q in 0..w {
                            let v = x[(c * h + p) * w + q];
                            if v == 0.0 {
                                continue;
                            }
                            for_each_tap(p, q, kh, kw, oh, ow, |ki, kj, i, j| {
                                for o in 0..out_channels {
                                    gw[((o * in_channels + c) * kh + ki) * kw + kj] += gy[(o * oh + i) * ow + j] * v;
                                }
                            });
                        }
                    }
                }
                want_input_grad.then(|| {
                    let mut gx = vec![0.0; x.len()];
                    for o in 0..out_channels {
                        for i in 0..oh {
                            for j in 0..ow {
                                let g = gy[(o * oh + i) * ow + j];
                                if g == 0.0 {
                                    continue;
                                }
                                for c in 0..in_channels {
                                    for ki in 0..kh {
                                        let xs = c * h * w + (i + ki) * w + j;
                                        let ws = ((o * in_channels + c) * kh + ki) * kw;
                                        axpy(g, &self.weights[ws..ws + kw], &mut gx[xs..xs + kw]);
                                    }
                                }
                            }
                        }
                    }
                    gx
                })
            }
            LayerSpec::MaxPool2d { window } => want_input_grad.then(|| {
                let (c, h, w) = (self.input_shape[0], self.input_shape[1], self.input_shape[2]);
                let (oh, ow) = (self.output_shape[1], self.output_shape[2]);
                let mut gx = vec![0.0; x.len()];
                for ch in 0..c {
                    for i in 0..oh {
                        for j in 0..ow {
                            let idx = argmax_in_window(x, ch * h * w, w, i * window, j * window, window);
                            gx[idx] += gy[(ch * oh + i) * ow + j];
                        }
                    }
                }
                gx
            }),
            LayerSpec::Relu => {
                want_input_grad.then(|| x.iter().zip(gy).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect())
            }
            LayerSpec::Sigmoid => want_input_grad.then(|| y.iter().zip(gy).map(|(&s, &g)| g * s * (1.0 - s)).collect()),
            LayerSpec::Flatten => want_input_grad.then(|| gy.to_vec()),
        }
    }
}

/// Calls `f(ki, kj, i, j)` for every kernel tap `(ki, kj)` that connects
/// input pixel `(p, q)` to output pixel `(i, j) = (p - ki, q - kj)`.
#[inline]
fn for_each_tap(
    p: usize,
    q: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    mut f: impl FnMut(usize, usize, usize, usize),
) {
    let ki_lo = (p + 1).saturating_sub(oh);
    let kj_lo = (q + 1).saturating_sub(ow);
    for ki in ki_lo..kh.min(p + 1) {
        for kj in kj_lo..kw.min(q + 1) {
            f(ki, kj, p - ki, q - kj);
        }
    }
}

/// Index of the first maximum inside a `window`x`window` block.
fn argmax_in_window(x: &[f64], base: usize, width: usize, row: usize, col: usize, window: usize) -> usize {
    let mut best = base + row * width + col;
    for r in row..row + window {
        for c in col..col + window {
            let idx = base + r * width + c;
            if x[idx] > x[best] {
                best = idx;
            }
        }
    }
    best
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
