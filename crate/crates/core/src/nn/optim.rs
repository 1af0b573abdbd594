use serde::{Deserialize, Serialize};

use super::{Gradients, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam {
        #[serde(default = "adam_lr")]
        learning_rate: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "epsilon")]
        epsilon: f64,
    },
    Sgd {
        #[serde(default = "sgd_lr")]
        learning_rate: f64,
        #[serde(default = "momentum")]
        momentum: f64,
    },
}

fn adam_lr() -> f64 {
    0.001
}
fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn epsilon() -> f64 {
    1e-8
}
fn sgd_lr() -> f64 {
    0.01
}
fn momentum() -> f64 {
    0.9
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam()
    }
}

impl OptimizerConfig {
    pub fn adam() -> Self {
        OptimizerConfig::Adam { learning_rate: adam_lr(), beta1: beta1(), beta2: beta2(), epsilon: epsilon() }
    }

    pub fn sgd() -> Self {
        OptimizerConfig::Sgd { learning_rate: sgd_lr(), momentum: momentum() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Adam { .. } => "adam",
            OptimizerConfig::Sgd { .. } => "sgd",
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerConfig::Adam { learning_rate, .. } | OptimizerConfig::Sgd { learning_rate, .. } => learning_rate,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        let ok = match *self {
            OptimizerConfig::Adam { learning_rate, beta1, beta2, epsilon } => {
                learning_rate >= 0.0 && unit(beta1) && unit(beta2) && epsilon > 0.0
            }
            OptimizerConfig::Sgd { learning_rate, momentum } => learning_rate >= 0.0 && unit(momentum),
        };
        if ok {
            Ok(())
        } else {
            Err(NnError::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentumState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub velocity: Vec<Vec<f64>>,
    pub step: u64,
}

/// Optimizer with its running state. Moment buffers are allocated on the
/// first step to match the parameter arrays.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd(SgdMomentumState),
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig) -> Self {
        match *config {
            OptimizerConfig::Adam { learning_rate, beta1, beta2, epsilon } => Optimizer::Adam(AdamState {
                learning_rate,
                beta1,
                beta2,
                epsilon,
                first_moment: Vec::new(),
                second_moment: Vec::new(),
                step: 0,
            }),
            OptimizerConfig::Sgd { learning_rate, momentum } => {
                Optimizer::Sgd(SgdMomentumState { learning_rate, momentum, velocity: Vec::new(), step: 0 })
            }
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            Optimizer::Adam(s) => s.step,
            Optimizer::Sgd(s) => s.step,
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &Gradients) {
        assert_eq!(params.len(), grads.per_param.len(), "gradient arrays do not match parameters");
        let zeros = || grads.per_param.iter().map(|g| vec![0.0; g.len()]).collect::<Vec<_>>();
        match self {
            Optimizer::Adam(s) => {
                if s.first_moment.is_empty() {
                    s.first_moment = zeros();
                    s.second_moment = zeros();
                }
                s.step += 1;
                let t = s.step as i32;
                let c1 = 1.0 - s.beta1.powi(t);
                let c2 = 1.0 - s.beta2.powi(t);
                for (k, p) in params.into_iter().enumerate() {
                    let g = &grads.per_param[k];
                    let m = &mut s.first_moment[k];
                    let v = &mut s.second_moment[k];
                    for i in 0..p.len() {
                        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
                        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        p[i] -= s.learning_rate * m_hat / (v_hat.sqrt() + s.epsilon);
                    }
                }
            }
            Optimizer::Sgd(s) => {
                if s.velocity.is_empty() {
                    s.velocity = zeros();
                }
                s.step += 1;
                for (k, p) in params.into_iter().enumerate() {
                    let g = &grads.per_param[k];
                    let vel = &mut s.velocity[k];
                    for i in 0..p.len() {
                        vel[i] = s.momentum * vel[i] - s.learning_rate * g[i];
                        p[i] += vel[i];
                    }
                }
            }
        }
    }
}
