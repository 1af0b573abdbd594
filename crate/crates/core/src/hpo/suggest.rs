use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::experiment::{Trial, TrialStatus};
use super::gp::{gp_fit, KernelParams};
use super::{SearchError, SearchSpace};
use crate::seed::{self, Rng};

/// Random trials run before the surrogate takes over.
pub const BAYES_WARMUP: usize = 3;
/// Candidate points scored by expected improvement per suggestion.
pub const BAYES_CANDIDATES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Grid,
    Random,
    #[default]
    Bayesian,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(Algorithm::Grid),
            "random" => Ok(Algorithm::Random),
            "bayesian" => Ok(Algorithm::Bayesian),
            other => Err(format!("unknown search algorithm {other:?}")),
        }
    }
}

/// Proposes the next assignment given the trials so far.
#[derive(Debug, Clone)]
pub struct Suggester {
    algorithm: Algorithm,
    space: SearchSpace,
    rng: Rng,
    /// Per-dimension lattice resolution (grid only).
    resolution: usize,
    cursor: usize,
}

impl Suggester {
    pub fn new(algorithm: Algorithm, space: SearchSpace, max_trials: usize, seed: u64) -> Self {
        let d = space.dims() as u32;
        // smallest r with r^d >= max_trials, i.e. ceil(max_trials^(1/d))
        let mut resolution = 1usize;
        while resolution.checked_pow(d).is_some_and(|c| c < max_trials) {
            resolution += 1;
        }
        Self { algorithm, space, rng: seed::rng(seed::derive(seed, "suggest")), resolution, cursor: 0 }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn grid_resolution(&self) -> usize {
        self.resolution
    }

    /// `Ok(None)` once a grid is exhausted; random and Bayesian search never
    /// run out.
    pub fn suggest(&mut self, history: &[Trial]) -> Result<Option<Vec<f64>>, SearchError> {
        match self.algorithm {
            Algorithm::Grid => Ok(self.next_grid_point()),
            Algorithm::Random => Ok(Some(self.random_point())),
            Algorithm::Bayesian => self.bayesian(history).map(Some),
        }
    }

    fn random_unit(&mut self) -> Vec<f64> {
        (0..self.space.dims()).map(|_| self.rng.random::<f64>()).collect()
    }

    fn random_point(&mut self) -> Vec<f64> {
        let u = self.random_unit();
        self.space.denormalize(&u)
    }

    fn next_grid_point(&mut self) -> Option<Vec<f64>> {
        let r = self.resolution;
        let total = r.checked_pow(self.space.dims() as u32)?;
        if self.cursor >= total {
            return None;
        }
        // mixed radix, last dimension fastest
        let mut rest = self.cursor;
        let mut unit = vec![0.0; self.space.dims()];
        for u in unit.iter_mut().rev() {
            let i = rest % r;
            rest /= r;
            *u = if r == 1 { 0.5 } else { i as f64 / (r - 1) as f64 };
        }
        self.cursor += 1;
        Some(self.space.denormalize(&unit))
    }

    fn bayesian(&mut self, history: &[Trial]) -> Result<Vec<f64>, SearchError> {
        let observed: Vec<(Vec<f64>, f64)> = history
            .iter()
            .filter(|t| t.status == TrialStatus::Ok)
            .filter_map(|t| t.objective.map(|y| (self.space.normalize(&t.params), y)))
            .collect();
        // candidates are drawn even during warm-up so the stream position
        // depends only on the trial index
        let candidates: Vec<Vec<f64>> = (0..BAYES_CANDIDATES).map(|_| self.random_unit()).collect();
        if history.len() < BAYES_WARMUP || observed.is_empty() {
            return Ok(self.space.denormalize(&candidates[0]));
        }
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = observed.into_iter().unzip();
        let best = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let gp = gp_fit(&xs, &ys, KernelParams::from_observations(&ys))?;
        let mut pick = 0;
        let mut pick_ei = f64::NEG_INFINITY;
        for (i, c) in candidates.iter().enumerate() {
            let ei = gp.expected_improvement(c, best);
            if ei > pick_ei {
                pick = i;
                pick_ei = ei;
            }
        }
        Ok(self.space.denormalize(&candidates[pick]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::ParamRange;

    fn trial(index: usize, params: Vec<f64>, y: f64) -> Trial {
        Trial { index, params, objective: Some(y), status: TrialStatus::Ok }
    }

    #[test]
    fn grid_resolution_and_exhaustion() {
        let mut s = Suggester::new(Algorithm::Grid, SearchSpace::adam_default(), 15, 0);
        assert_eq!(s.grid_resolution(), 4);
        let pts: Vec<_> = std::iter::from_fn(|| s.suggest(&[]).unwrap()).collect();
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[0], vec![0.001, 0.88]);
        assert_eq!(pts[15], vec![0.002, 0.93]);

        let one = SearchSpace::new(vec![ParamRange::new("x", 0.0, 2.0)]).unwrap();
        let mut s = Suggester::new(Algorithm::Grid, one, 1, 0);
        assert_eq!(s.suggest(&[]).unwrap(), Some(vec![1.0]));
        assert_eq!(s.suggest(&[]).unwrap(), None);
    }

    #[test]
    fn random_within_bounds() {
        let space = SearchSpace::sgd_default();
        let mut s = Suggester::new(Algorithm::Random, space.clone(), 15, 3);
        for _ in 0..1000 {
            assert!(space.contains(&s.suggest(&[]).unwrap().unwrap()));
        }
    }

    #[test]
    fn bayesian_avoids_observed_point() {
        let space = SearchSpace::new(vec![ParamRange::new("x", 0.0, 1.0)]).unwrap();
        let mut s = Suggester::new(Algorithm::Bayesian, space, 15, 1);
        let history = vec![trial(0, vec![0.1], 5.0), trial(1, vec![0.5], 1.0), trial(2, vec![0.9], 4.0)];
        let next = s.suggest(&history).unwrap().unwrap();
        assert!(history.iter().all(|t| t.params[0] != next[0]));
        assert!((next[0] - 0.5).abs() < 0.3, "{next:?}");
    }

    #[test]
    fn same_seed_same_suggestions() {
        let run = |seed| {
            let mut s = Suggester::new(Algorithm::Bayesian, SearchSpace::adam_default(), 15, seed);
            let mut history = Vec::new();
            for i in 0..6 {
                let p = s.suggest(&history).unwrap().unwrap();
                let y = (p[0] - 0.0015).powi(2);
                history.push(trial(i, p, y));
            }
            history
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }
}
