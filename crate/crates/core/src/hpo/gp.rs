//! Exact GP regression with a squared-exponential kernel.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::SearchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Shared by every dimension of the (normalized) input.
    pub lengthscale: f64,
    /// sigma_f^2
    pub signal_variance: f64,
    /// sigma_n^2
    pub noise_variance: f64,
}

impl KernelParams {
    pub const DEFAULT_LENGTHSCALE: f64 = 0.2;

    /// Lengthscale 0.2, signal variance = variance of `y` (1 when `y` is
    /// constant), noise = 1e-6 of the signal variance.
    pub fn from_observations(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let signal_variance = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        Self { lengthscale: Self::DEFAULT_LENGTHSCALE, signal_variance, noise_variance: 1e-6 * signal_variance }
    }

    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.signal_variance * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Fitted posterior. The prior mean is the mean of the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct GpSurrogate {
    points: Vec<Vec<f64>>,
    kernel: KernelParams,
    prior_mean: f64,
    /// Lower Cholesky factor of `K + (sigma_n^2 + jitter) I`, row-major.
    chol: Vec<f64>,
    /// `(K + sigma_n^2 I)^-1 (y - m)`
    alpha: Vec<f64>,
    jitter: f64,
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
fn forward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * b[k]).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
fn backward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * b[k]).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Fits the posterior. When the covariance is numerically singular a jitter
/// growing from 1e-12 to 1e-4 times the signal variance is added to the
/// diagonal.
pub fn gp_fit(points: &[Vec<f64>], objectives: &[f64], kernel: KernelParams) -> Result<GpSurrogate, SearchError> {
    let n = points.len();
    assert!(n >= 1 && n == objectives.len(), "need matching, non-empty observations");
    assert!(objectives.iter().all(|y| y.is_finite()), "objectives must be finite");
    let prior_mean = objectives.iter().sum::<f64>() / n as f64;
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = kernel.k(&points[i], &points[j]);
        }
        cov[i * n + i] += kernel.noise_variance;
    }

    let mut jitter = 0.0;
    let chol = loop {
        let mut a = cov.clone();
        (0..n).for_each(|i| a[i * n + i] += jitter);
        if let Some(l) = cholesky(&a, n) {
            break l;
        }
        jitter = if jitter == 0.0 { 1e-12 * kernel.signal_variance } else { jitter * 10.0 };
        if jitter > 1e-4 * kernel.signal_variance {
            return Err(SearchError::NotPositiveDefinite { jitter });
        }
    };

    let mut alpha: Vec<f64> = objectives.iter().map(|y| y - prior_mean).collect();
    forward_sub(&chol, n, &mut alpha);
    backward_sub(&chol, n, &mut alpha);
    Ok(GpSurrogate { points: points.to_vec(), kernel, prior_mean, chol, alpha, jitter })
}

impl GpSurrogate {
    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Posterior `(mean, variance)` at `query`.
    pub fn predict(&self, query: &[f64]) -> (f64, f64) {
        let n = self.points.len();
        let mut v: Vec<f64> = self.points.iter().map(|p| self.kernel.k(p, query)).collect();
        let mean = self.prior_mean + v.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        forward_sub(&self.chol, n, &mut v);
        let var = self.kernel.signal_variance - v.iter().map(|x| x * x).sum::<f64>();
        (mean, var.max(0.0))
    }

    /// EI of `query` over `best` for minimization.
    pub fn expected_improvement(&self, query: &[f64], best: f64) -> f64 {
        let (mean, var) = self.predict(query);
        expected_improvement(mean, var.sqrt(), best)
    }
}

/// `(best - mu) Phi(z) + sigma phi(z)` with `z = (best - mu) / sigma`;
/// `max(0, best - mu)` when `sigma` is 0.
pub fn expected_improvement(mean: f64, std: f64, best: f64) -> f64 {
    let gain = best - mean;
    if std <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / std;
    let unit = Normal::standard();
    (gain * unit.cdf(z) + std * unit.pdf(z)).max(0.0)
}
