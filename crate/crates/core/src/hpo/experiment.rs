use std::io::Write;

use serde::{Deserialize, Serialize};

use super::space::bind_assignment;
use super::suggest::{Algorithm, Suggester};
use super::{SearchError, SearchSpace};
use crate::dataset::{BeaconLayout, LabelledSample};
use crate::error::{Error, Result};
use crate::localizer::fit_and_evaluate;
use crate::models::{ModelKind, ModelOptions};
use crate::nn::{NnError, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Diverged,
}

impl TrialStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// In search-space order.
    pub params: Vec<f64>,
    /// `None` for diverged trials.
    pub objective: Option<f64>,
    pub status: TrialStatus,
}

fn default_max_trials() -> usize {
    15
}

fn default_goal() -> Option<f64> {
    Some(1.2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "default_max_trials")]
    pub max_trials: usize,
    /// Stop once an objective at or below this is seen. `None` or a
    /// non-finite value disables early stopping.
    #[serde(default = "default_goal")]
    pub goal: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { algorithm: Algorithm::default(), max_trials: default_max_trials(), goal: default_goal(), seed: 0 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_trials == 0 {
            return Err(SearchError::InvalidConfig("max_trials must be at least 1".into()));
        }
        if let Some(g) = self.goal {
            if !(g > 0.0) {
                return Err(SearchError::InvalidConfig(format!("goal must be positive, got {g}")));
            }
        }
        Ok(())
    }

    fn reached(&self, objective: f64) -> bool {
        self.goal.is_some_and(|g| g.is_finite() && objective <= g)
    }
}

/// Experiment file contents: the config plus the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub config: ExperimentConfig,
    pub space: SearchSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trials: Vec<Trial>,
    /// Index into `trials` of the lowest ok objective.
    pub best: usize,
}

impl ExperimentResult {
    pub fn best_trial(&self) -> &Trial {
        &self.trials[self.best]
    }

    pub fn best_objective(&self) -> f64 {
        self.best_trial().objective.expect("best trial is ok")
    }
}

/// Sequential suggest/evaluate loop. The objective returns `Ok(None)` for
/// a diverged trial.
pub fn run_search<E, F>(space: &SearchSpace, config: &ExperimentConfig, mut objective: F) -> Result<ExperimentResult, E>
where
    E: From<SearchError>,
    F: FnMut(&[f64]) -> Result<Option<f64>, E>,
{
    config.validate()?;
    let mut suggester = Suggester::new(config.algorithm, space.clone(), config.max_trials, config.seed);
    let mut trials: Vec<Trial> = Vec::new();
    while trials.len() < config.max_trials {
        let Some(params) = suggester.suggest(&trials)? else { break };
        let outcome = objective(&params)?;
        let status = if outcome.is_some() { TrialStatus::Ok } else { TrialStatus::Diverged };
        trials.push(Trial { index: trials.len(), params, objective: outcome, status });
        if outcome.is_some_and(|y| config.reached(y)) {
            break;
        }
    }
    let best = trials
        .iter()
        .filter_map(|t| t.objective.map(|y| (t.index, y)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or(SearchError::ExperimentFailed { trials: trials.len() })?;
    Ok(ExperimentResult { trials, best })
}

/// Tunes `base` on the given split. The objective is the mean test error in
/// grid units; every trial trains with `base.seed`.
pub fn run_experiment(
    kind: ModelKind,
    options: &ModelOptions,
    layout: &BeaconLayout,
    train: &[LabelledSample],
    test: &[LabelledSample],
    base: &TrainConfig,
    spec: &ExperimentSpec,
) -> Result<ExperimentResult> {
    // fail on unbindable names before spending a trial
    let probe: Vec<f64> = spec.space.ranges().iter().map(|r| r.min).collect();
    bind_assignment(&spec.space, &probe, base)?;
    run_search::<Error, _>(&spec.space, &spec.config, |params| {
        let cfg = bind_assignment(&spec.space, params, base)?;
        match fit_and_evaluate(kind, options, layout, train, test, &cfg) {
            Ok((_, outcome)) => Ok(Some(outcome.metrics.mean_error_grid)),
            Err(Error::Nn(NnError::Diverged { .. })) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

/// `trial,<param names>,objective,status`; diverged trials leave the
/// objective empty.
pub fn write_trials_csv<W: Write>(w: W, space: &SearchSpace, trials: &[Trial]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["trial".to_owned()];
    header.extend(space.names().map(str::to_owned));
    header.extend(["objective".to_owned(), "status".to_owned()]);
    out.write_record(&header)?;
    for t in trials {
        let mut row = vec![t.index.to_string()];
        row.extend(t.params.iter().map(f64::to_string));
        row.push(t.objective.map(|y| y.to_string()).unwrap_or_default());
        row.push(t.status.as_str().to_owned());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
