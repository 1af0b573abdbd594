use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::nn::{OptimizerConfig, TrainConfig};

/// Names a range may use; each maps onto a [`TrainConfig`] field.
pub const BINDABLE_PARAMS: [&str; 7] =
    ["learning_rate", "beta1", "beta2", "epsilon", "momentum", "epochs", "batch_size"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub fn new(name: &str, min: f64, max: f64) -> Self {
        Self { name: name.to_owned(), min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.min..=self.max).contains(&v)
    }
}

/// Ordered continuous ranges. Assignments are plain `Vec<f64>` in the same
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParamRange>", into = "Vec<ParamRange>")]
pub struct SearchSpace(Vec<ParamRange>);

impl SearchSpace {
    pub fn new(ranges: Vec<ParamRange>) -> Result<Self, SearchError> {
        if ranges.is_empty() {
            return Err(SearchError::InvalidSpace("no parameters".into()));
        }
        for (i, r) in ranges.iter().enumerate() {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) {
                return Err(SearchError::InvalidSpace(format!(
                    "{}: need finite min < max, got [{}, {}]",
                    r.name, r.min, r.max
                )));
            }
            if ranges[..i].iter().any(|o| o.name == r.name) {
                return Err(SearchError::InvalidSpace(format!("duplicate parameter {}", r.name)));
            }
        }
        Ok(Self(ranges))
    }

    /// Learning rate and beta1; beta2 stays at its default.
    pub fn adam_default() -> Self {
        Self(vec![ParamRange::new("learning_rate", 0.001, 0.002), ParamRange::new("beta1", 0.88, 0.93)])
    }

    pub fn sgd_default() -> Self {
        Self(vec![ParamRange::new("learning_rate", 0.005, 0.02), ParamRange::new("momentum", 0.85, 0.95)])
    }

    pub fn default_for(optimizer: &OptimizerConfig) -> Self {
        match optimizer {
            OptimizerConfig::Adam { .. } => Self::adam_default(),
            OptimizerConfig::Sgd { .. } => Self::sgd_default(),
        }
    }

    pub fn ranges(&self) -> &[ParamRange] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|r| r.name.as_str())
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.0.len() && self.0.iter().zip(point).all(|(r, &v)| r.contains(v))
    }

    /// Maps a point into the unit cube.
    pub fn normalize(&self, point: &[f64]) -> Vec<f64> {
        self.0.iter().zip(point).map(|(r, v)| (v - r.min) / r.width()).collect()
    }

    /// Inverse of [`normalize`](Self::normalize), clamped into bounds.
    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        self.0.iter().zip(unit).map(|(r, u)| (r.min + u * r.width()).clamp(r.min, r.max)).collect()
    }
}

impl TryFrom<Vec<ParamRange>> for SearchSpace {
    type Error = SearchError;

    fn try_from(ranges: Vec<ParamRange>) -> Result<Self, Self::Error> {
        Self::new(ranges)
    }
}

impl From<SearchSpace> for Vec<ParamRange> {
    fn from(s: SearchSpace) -> Self {
        s.0
    }
}

/// Applies an assignment to a copy of `base`. Integer fields are rounded.
pub fn bind_assignment(space: &SearchSpace, point: &[f64], base: &TrainConfig) -> Result<TrainConfig, SearchError> {
    let mut cfg = base.clone();
    for (range, &v) in space.ranges().iter().zip(point) {
        let unbindable = || {
            SearchError::InvalidSpace(format!(
                "{} cannot be bound to a {} configuration",
                range.name,
                base.optimizer.name()
            ))
        };
        match (range.name.as_str(), &mut cfg.optimizer) {
            ("learning_rate", OptimizerConfig::Adam { learning_rate, .. })
            | ("learning_rate", OptimizerConfig::Sgd { learning_rate, .. }) => *learning_rate = v,
            ("beta1", OptimizerConfig::Adam { beta1, .. }) => *beta1 = v,
            ("beta2", OptimizerConfig::Adam { beta2, .. }) => *beta2 = v,
            ("epsilon", OptimizerConfig::Adam { epsilon, .. }) => *epsilon = v,
            ("momentum", OptimizerConfig::Sgd { momentum, .. }) => *momentum = v,
            ("epochs", _) => cfg.epochs = v.round().max(1.0) as usize,
            ("batch_size", _) => cfg.batch_size = v.round().max(1.0) as usize,
            _ => return Err(unbindable()),
        }
    }
    Ok(cfg)
}
