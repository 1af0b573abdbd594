use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{LossKind, Network, NnError, Optimizer, OptimizerConfig, Tensor};
use crate::dataset::GridPoint;
use crate::seed;

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 100, batch_size: 100, loss: LossKind::Rmse, optimizer: OptimizerConfig::adam(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NnError::Config("epochs and batch size must be at least 1".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Sample-weighted mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch training. Each epoch visits the samples in a fresh seeded
/// permutation; the last batch of an epoch may be short.
pub fn train(
    network: &mut Network,
    inputs: &[Tensor],
    targets: &[Tensor],
    config: &TrainConfig,
) -> Result<TrainHistory, NnError> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(NnError::EmptyTrainingSet);
    }
    if inputs.len() != targets.len() {
        return Err(NnError::Shape(format!("{} inputs for {} targets", inputs.len(), targets.len())));
    }
    let mut optimizer = Optimizer::new(&config.optimizer);
    let mut rng = seed::rng(seed::derive(config.seed, "shuffle"));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<Tensor> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let ts: Vec<Tensor> = chunk.iter().map(|&i| targets[i].clone()).collect();
            let (loss, grads) = network.backward(&xs, &ts, config.loss)?;
            if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
                return Err(NnError::Diverged { epoch, batch, loss });
            }
            optimizer.step(network.params_mut(), &grads);
            weighted += loss * chunk.len() as f64;
        }
        history.epoch_losses.push(weighted / inputs.len() as f64);
    }
    Ok(history)
}

/// Localization error summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mean_error_grid: f64,
    pub mean_error_ft: f64,
    /// Euclidean error of each sample, grid units, in input order.
    pub per_sample_grid: Vec<f64>,
}

impl Metrics {
    pub fn from_errors(per_sample_grid: Vec<f64>, cell_feet: f64) -> Self {
        let mean = per_sample_grid.iter().sum::<f64>() / per_sample_grid.len() as f64;
        Self { mean_error_grid: mean, mean_error_ft: mean * cell_feet, per_sample_grid }
    }

    pub fn per_sample_ft(&self, cell_feet: f64) -> Vec<f64> {
        self.per_sample_grid.iter().map(|e| e * cell_feet).collect()
    }
}

/// Mean Euclidean distance between predicted and true positions of a
/// network with a 2-d `(x, y)` output.
pub fn evaluate(
    network: &Network,
    inputs: &[Tensor],
    truths: &[GridPoint],
    cell_feet: f64,
) -> Result<Metrics, NnError> {
    if inputs.is_empty() {
        return Err(NnError::EmptyTestSet);
    }
    let errors = inputs
        .iter()
        .zip(truths)
        .map(|(x, t)| {
            let y = network.forward(x)?;
            let p = GridPoint::new(y.data()[0], y.data()[1]);
            Ok(p.distance(t))
        })
        .collect::<Result<Vec<_>, NnError>>()?;
    Ok(Metrics::from_errors(errors, cell_feet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;

    fn small_net(seed: u64) -> Network {
        let specs =
            [LayerSpec::Dense { inputs: 3, outputs: 16 }, LayerSpec::Relu, LayerSpec::Dense { inputs: 16, outputs: 2 }];
        Network::build(vec![3], &specs, &mut crate::seed::rng(seed)).unwrap()
    }

    fn toy_data(n: usize) -> (Vec<Tensor>, Vec<Tensor>) {
        let xs =
            (0..n).map(|i| Tensor::vector(vec![i as f64 / n as f64, ((i * 7) % n) as f64 / n as f64, 0.5])).collect();
        let ts = (0..n).map(|i| Tensor::vector(vec![(i % 5) as f64, (i % 3) as f64])).collect();
        (xs, ts)
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (xs, ts) = toy_data(20);
        let mut net = small_net(1);
        let before = net.clone();
        for optimizer in [
            OptimizerConfig::Adam { learning_rate: 0.0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 },
            OptimizerConfig::Sgd { learning_rate: 0.0, momentum: 0.9 },
        ] {
            let cfg = TrainConfig { epochs: 3, batch_size: 7, optimizer, ..Default::default() };
            train(&mut net, &xs, &ts, &cfg).unwrap();
            assert_eq!(net, before);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ts) = toy_data(37);
        let cfg = TrainConfig { epochs: 5, batch_size: 10, seed: 4, ..Default::default() };
        let mut a = small_net(2);
        let mut b = small_net(2);
        let ha = train(&mut a, &xs, &ts, &cfg).unwrap();
        let hb = train(&mut b, &xs, &ts, &cfg).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert_eq!(ha.epoch_losses.len(), 5);
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, _) = toy_data(10);
        let ts: Vec<Tensor> = (0..10).map(|_| Tensor::vector(vec![1e7, 1e7])).collect();
        let mut net = small_net(3);
        let cfg = TrainConfig { epochs: 1, batch_size: 4, ..Default::default() };
        match train(&mut net, &xs, &ts, &cfg) {
            Err(NnError::Diverged { epoch: 0, batch: 0, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let mut net = small_net(0);
        assert!(matches!(train(&mut net, &[], &[], &TrainConfig::default()), Err(NnError::EmptyTrainingSet)));
    }

    #[test]
    fn evaluate_three_four_five() {
        let net = Network::empty(vec![2]);
        let m = evaluate(&net, &[Tensor::vector(vec![3.0, 4.0])], &[GridPoint::new(0.0, 0.0)], 10.0).unwrap();
        assert_eq!(m.mean_error_grid, 5.0);
        assert_eq!(m.mean_error_ft, 50.0);
        let m = evaluate(&net, &[Tensor::vector(vec![1.0, 2.0])], &[GridPoint::new(1.0, 2.0)], 10.0).unwrap();
        assert_eq!(m.mean_error_ft, 0.0);
        assert_eq!(Metrics::from_errors(vec![2.2], 10.0).mean_error_ft, 22.0);
    }
}
