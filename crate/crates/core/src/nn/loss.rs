use serde::{Deserialize, Serialize};

/// Batch losses. Both average over every output element of the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `sqrt(mean((y - t)^2))`
    #[default]
    Rmse,
    /// `mean((y - t)^2)`
    Mse,
}

impl LossKind {
    /// Loss value and its gradient with respect to each output.
    pub fn value_and_grad(&self, outputs: &[&[f64]], targets: &[&[f64]]) -> (f64, Vec<Vec<f64>>) {
        let n: usize = outputs.iter().map(|o| o.len()).sum();
        let n = n as f64;
        let sq: f64 =
            outputs.iter().zip(targets).flat_map(|(o, t)| o.iter().zip(t.iter())).map(|(y, t)| (y - t) * (y - t)).sum();
        let mse = sq / n;
        let (value, scale) = match self {
            LossKind::Mse => (mse, 2.0 / n),
            LossKind::Rmse => {
                let rmse = mse.sqrt();
                (rmse, if rmse > 0.0 { 1.0 / (n * rmse) } else { 0.0 })
            }
        };
        let grads = outputs
            .iter()
            .zip(targets)
            .map(|(o, t)| o.iter().zip(t.iter()).map(|(y, t)| scale * (y - t)).collect())
            .collect();
        (value, grads)
    }
}
