//! Command bodies. Each reads its inputs through a [`RunRecord`], writes its
//! artifacts through it, and finishes with a manifest.
//!
//! Seed derivation from the root seed `s`:
//!
//! | use                          | seed                                   |
//! |------------------------------|----------------------------------------|
//! | train/test split             | `derive(s, "split")`                   |
//! | network training             | `derive(s, "train")`                   |
//! | hyperparameter search        | `derive(s, "tune")`                    |
//! | augmentation policy          | `derive(s, "augment")`                 |
//! | augment evaluation run `i`   | `derive_indexed(s, "evaluate", i)`, then its own `split`/`train` children |
//! | dropout study seed `i`       | `derive_indexed(s, "study", i)`        |
//! | synthetic corpus             | `derive(s, "synth")`                   |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fingerloc::dataset::{parse_labelled, parse_unlabelled, split, synth_generate, write_labelled, write_unlabelled};
use fingerloc::digest::sha256_hex;
use fingerloc::hpo::{bind_assignment, run_experiment, write_trials_csv};
use fingerloc::nn::save_network;
use fingerloc::rationalization::RankedBeacon;
use fingerloc::seed::{derive, derive_indexed};
use fingerloc::{
    augment, centroid_baseline, dropout_study, fit_and_evaluate, prepare_split, rank_beacons, train_autoencoder,
    AugmentCounts, AugmentationPolicy, BeaconLayout, DatasetError, ErrorCdf, ExperimentConfig, ExperimentSpec,
    LabelledSample, Metrics, StudyConfig, TrainConfig, UnlabelledSample,
};
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::manifest::{RunManifest, RunRecord};

/// What a finished command hands back to the caller.
#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

/// Runs `command` with an already resolved config.
pub fn execute(command: &str, cfg: &Config, out_dir: &Path) -> Result<Outcome> {
    let started = chrono::Utc::now();
    let mut rec = RunRecord::create(out_dir)?;
    let summary = match command {
        "train" => train(cfg, &mut rec)?,
        "tune" => tune(cfg, &mut rec)?,
        "augment" => augment_cmd(cfg, &mut rec)?,
        "rationalize" => rationalize(cfg, &mut rec)?,
        "synth" => synth(cfg, &mut rec)?,
        other => return Err(CliError::Config(format!("unknown command {other:?}"))),
    };
    let manifest = rec.finish(command, cfg.clone(), started)?;
    Ok(Outcome { out_dir: out_dir.to_owned(), manifest, summary })
}

/// Re-runs a manifest's command into `out_dir` and checks every artifact
/// digest against the recorded one.
pub fn replay(manifest: &Path, out_dir: &Path, jobs: Option<usize>) -> Result<Outcome> {
    let recorded = RunManifest::load(manifest)?;
    for input in &recorded.inputs {
        if let Some(path) = &input.path {
            let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            if sha256_hex(&bytes) != input.sha256 {
                return Err(CliError::InputChanged { role: input.name.clone(), path: path.clone() });
            }
        }
    }
    let mut cfg = recorded.config.clone();
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    let mut outcome = execute(&recorded.command, &cfg, out_dir)?;
    if let Some(changed) = recorded.inputs.iter().find(|i| !outcome.manifest.inputs.contains(i)) {
        return Err(CliError::InputChanged {
            role: changed.name.clone(),
            path: changed.path.clone().unwrap_or_else(|| "<built-in>".into()),
        });
    }
    let mut differ: Vec<String> = recorded
        .artifacts
        .iter()
        .filter(|a| outcome.manifest.artifact(&a.name).is_none_or(|b| b.sha256 != a.sha256))
        .map(|a| a.name.clone())
        .collect();
    differ.extend(
        outcome.manifest.artifacts.iter().filter(|b| recorded.artifact(&b.name).is_none()).map(|b| b.name.clone()),
    );
    if !differ.is_empty() {
        return Err(CliError::NotReproduced(differ));
    }
    outcome.summary.push(format!("replay: all {} artifacts match the manifest", recorded.artifacts.len()));
    Ok(outcome)
}

fn load_layout(cfg: &Config, rec: &mut RunRecord) -> Result<BeaconLayout> {
    match &cfg.data.layout {
        Some(path) => {
            let bytes = rec.read_input("layout", path).map_err(|e| match e {
                CliError::Read { path, source } => {
                    DatasetError::Layout(format!("cannot read layout {}: {source}", path.display())).into()
                }
                other => other,
            })?;
            let text = String::from_utf8(bytes).map_err(|_| DatasetError::Layout("layout is not UTF-8".into()))?;
            Ok(BeaconLayout::from_json(&text)?)
        }
        None => {
            let layout = BeaconLayout::library();
            rec.builtin_input("layout", layout.to_json().as_bytes());
            Ok(layout)
        }
    }
}

fn load_labelled(cfg: &Config, rec: &mut RunRecord, layout: &BeaconLayout) -> Result<Vec<LabelledSample>> {
    let path = cfg
        .data
        .labelled
        .as_ref()
        .ok_or_else(|| CliError::Config("no labelled data: pass --labelled or set FINGERLOC_DATA_DIR".into()))?;
    let bytes = rec.read_input("labelled", path)?;
    let samples = parse_labelled(bytes.as_slice(), layout)?;
    if samples.is_empty() {
        return Err(DatasetError::Schema(format!("{} has no labelled rows", path.display())).into());
    }
    Ok(samples)
}

fn load_unlabelled(cfg: &Config, rec: &mut RunRecord, layout: &BeaconLayout) -> Result<Vec<UnlabelledSample>> {
    let path =
        cfg.data.unlabelled.as_ref().ok_or_else(|| {
            CliError::Config("no unlabelled data: pass --unlabelled or set FINGERLOC_DATA_DIR".into())
        })?;
    let bytes = rec.read_input("unlabelled", path)?;
    Ok(parse_unlabelled(bytes.as_slice(), layout)?)
}

fn buffer<E>(f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), E>) -> Result<Vec<u8>>
where
    CliError: From<E>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn write_cdf(rec: &mut RunRecord, name: &str, errors_ft: &[f64]) -> Result<()> {
    let cdf =
        ErrorCdf::from_errors(errors_ft).ok_or_else(|| CliError::Core(fingerloc::nn::NnError::EmptyTestSet.into()))?;
    let bytes = buffer(|b| cdf.write_csv(b))?;
    rec.write(name, &bytes)
}

#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    model: &'a str,
    optimizer: &'a str,
    train_samples: usize,
    test_samples: usize,
    mean_error_grid: f64,
    mean_error_ft: f64,
    centroid_error_ft: f64,
    epoch_losses: &'a [f64],
}

fn train(cfg: &Config, rec: &mut RunRecord) -> Result<Vec<String>> {
    let layout = load_layout(cfg, rec)?;
    let samples = load_labelled(cfg, rec, &layout)?;
    let split_seed = rec.seed("split", derive(cfg.seed, "split"));
    let train_seed = rec.seed("train", derive(cfg.seed, "train"));
    let (train, test) = split(&samples, cfg.split_ratio, split_seed);
    let tc = TrainConfig { seed: train_seed, ..cfg.train.clone() };
    let (localizer, outcome) = fit_and_evaluate(cfg.model.kind, &cfg.model.options, &layout, &train, &test, &tc)?;
    let centroid = centroid_baseline(&train, &test, layout.cell_feet)?;
    let m = &outcome.metrics;
    let report = TrainReport {
        model: cfg.model.kind.as_str(),
        optimizer: tc.optimizer.name(),
        train_samples: train.len(),
        test_samples: test.len(),
        mean_error_grid: m.mean_error_grid,
        mean_error_ft: m.mean_error_ft,
        centroid_error_ft: centroid.mean_error_ft,
        epoch_losses: &outcome.history.epoch_losses,
    };
    rec.write("model.bin", &save_network(localizer.network()))?;
    rec.write_json("metrics.json", &report)?;
    write_cdf(rec, "cdf.csv", &m.per_sample_ft(layout.cell_feet))?;
    Ok(vec![
        format!("{} on {} train / {} test samples", report.model, train.len(), test.len()),
        format!(
            "mean error {:.3} grid = {:.2} ft (centroid {:.2} ft)",
            m.mean_error_grid, m.mean_error_ft, centroid.mean_error_ft
        ),
    ])
}

#[derive(Debug, Serialize)]
struct TuneReport {
    algorithm: String,
    trials: usize,
    best_trial: usize,
    best_objective: f64,
    best_params: BTreeMap<String, f64>,
    /// Objective of the untuned training config; `None` if it diverged.
    default_objective: Option<f64>,
}

fn tune(cfg: &Config, rec: &mut RunRecord) -> Result<Vec<String>> {
    let layout = load_layout(cfg, rec)?;
    let samples = load_labelled(cfg, rec, &layout)?;
    let split_seed = rec.seed("split", derive(cfg.seed, "split"));
    let base = TrainConfig { seed: rec.seed("train", derive(cfg.seed, "train")), ..cfg.train.clone() };
    let spec = ExperimentSpec {
        config: ExperimentConfig {
            algorithm: cfg.tune.algorithm,
            max_trials: cfg.tune.max_trials,
            goal: cfg.tune.goal,
            seed: rec.seed("tune", derive(cfg.seed, "tune")),
        },
        space: cfg.search_space(),
    };
    spec.config.validate()?;
    let (train, test) = split(&samples, cfg.split_ratio, split_seed);
    let (kind, options) = (cfg.model.kind, &cfg.model.options);
    let result = run_experiment(kind, options, &layout, &train, &test, &base, &spec)?;
    let best = result.best_trial();
    let default_objective = match fit_and_evaluate(kind, options, &layout, &train, &test, &base) {
        Ok((_, o)) => Some(o.metrics.mean_error_grid),
        Err(fingerloc::Error::Nn(fingerloc::nn::NnError::Diverged { .. })) => None,
        Err(e) => return Err(e.into()),
    };

    let tuned = bind_assignment(&spec.space, &best.params, &cfg.train)?;
    let best_config = Config { train: tuned, ..cfg.clone() };
    let report = TuneReport {
        algorithm: format!("{:?}", spec.config.algorithm).to_lowercase(),
        trials: result.trials.len(),
        best_trial: best.index,
        best_objective: result.best_objective(),
        best_params: spec.space.names().map(str::to_owned).zip(best.params.iter().copied()).collect(),
        default_objective,
    };
    let trials = buffer(|b| write_trials_csv(b, &spec.space, &result.trials))?;
    rec.write("trials.csv", &trials)?;
    rec.write("best_config.json", (best_config.to_json() + "\n").as_bytes())?;
    rec.write_json("tune.json", &report)?;
    let default = default_objective.map_or("diverged".to_owned(), |d| format!("{d:.3}"));
    Ok(vec![
        format!(
            "{} trials, best objective {:.3} grid (default config {default})",
            report.trials, report.best_objective
        ),
        format!("best parameters {:?}", report.best_params),
    ])
}

#[derive(Debug, Serialize)]
struct EvaluationRun {
    seed: u64,
    baseline_ft: f64,
    augmented_ft: f64,
    counts: AugmentCounts,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    strategy: String,
    protocol: fingerloc::Protocol,
    runs: Vec<EvaluationRun>,
    baseline_mean_ft: f64,
    augmented_mean_ft: f64,
    /// `1 - augmented / baseline`.
    relative_reduction: f64,
}

fn augment_cmd(cfg: &Config, rec: &mut RunRecord) -> Result<Vec<String>> {
    let layout = load_layout(cfg, rec)?;
    let samples = load_labelled(cfg, rec, &layout)?;
    let strategy = cfg.augment.strategy;
    let policy =
        AugmentationPolicy { seed: rec.seed("augment", derive(cfg.seed, "augment")), ..cfg.augment.policy.clone() };
    let autoencoder = if strategy.needs_autoencoder() {
        let unlabelled = load_unlabelled(cfg, rec, &layout)?;
        let vectors: Vec<_> = unlabelled.into_iter().map(|u| u.rssi).collect();
        let (net, _) = train_autoencoder(&vectors, &layout, &policy)?;
        rec.write("autoencoder.bin", &save_network(&net))?;
        Some(net)
    } else {
        None
    };
    let set = augment(&samples, strategy, autoencoder.as_ref(), &policy)?;
    let data = buffer(|b| write_labelled(b, &set.samples, &layout, true))?;
    rec.write("augmented.csv", &data)?;
    rec.write_json("counts.json", &set.counts)?;
    let c = set.counts;
    let mut summary = vec![format!(
        "{strategy}: {} original + {} naive + {} autoencoder ({} discarded) = {}",
        c.original,
        c.naive,
        c.kept,
        c.discarded,
        c.total()
    )];

    if cfg.augment.evaluate {
        let mut runs = Vec::with_capacity(cfg.augment.runs);
        let (mut base_errors, mut aug_errors) = (Vec::new(), Vec::new());
        for i in 0..cfg.augment.runs {
            let s = rec.seed(&format!("evaluate.{i}"), derive_indexed(cfg.seed, "evaluate", i as u64));
            let split_seed = derive(s, "split");
            let tc = TrainConfig { seed: derive(s, "train"), ..cfg.train.clone() };
            let fit = |train: &[LabelledSample], test: &[LabelledSample]| -> Result<Metrics> {
                let (_, o) = fit_and_evaluate(cfg.model.kind, &cfg.model.options, &layout, train, test, &tc)?;
                Ok(o.metrics)
            };
            let protocol = cfg.augment.protocol;
            let plain = prepare_split(
                &samples,
                fingerloc::Strategy::None,
                None,
                &policy,
                protocol,
                cfg.split_ratio,
                split_seed,
            )?;
            let grown = prepare_split(
                &samples,
                strategy,
                autoencoder.as_ref(),
                &policy,
                protocol,
                cfg.split_ratio,
                split_seed,
            )?;
            let before = fit(&plain.train, &plain.test)?;
            let after = fit(&grown.train, &grown.test)?;
            base_errors.extend(before.per_sample_ft(layout.cell_feet));
            aug_errors.extend(after.per_sample_ft(layout.cell_feet));
            runs.push(EvaluationRun {
                seed: s,
                baseline_ft: before.mean_error_ft,
                augmented_ft: after.mean_error_ft,
                counts: grown.counts,
            });
        }
        let mean = |f: fn(&EvaluationRun) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
        let (b, a) = (mean(|r| r.baseline_ft), mean(|r| r.augmented_ft));
        let report = EvaluationReport {
            strategy: strategy.to_string(),
            protocol: cfg.augment.protocol,
            baseline_mean_ft: b,
            augmented_mean_ft: a,
            relative_reduction: 1.0 - a / b,
            runs,
        };
        rec.write_json("evaluation.json", &report)?;
        write_cdf(rec, "cdf_baseline.csv", &base_errors)?;
        write_cdf(rec, "cdf_augmented.csv", &aug_errors)?;
        summary.push(format!(
            "mean error {b:.2} ft without augmentation, {a:.2} ft with ({:+.1}%)",
            -100.0 * report.relative_reduction
        ));
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct StudyReport<'a> {
    baseline_ft: f64,
    seeds: &'a [u64],
    beacons: &'a [fingerloc::rationalization::BeaconRecord],
    ranking: &'a [RankedBeacon],
}

fn rationalize(cfg: &Config, rec: &mut RunRecord) -> Result<Vec<String>> {
    let layout = load_layout(cfg, rec)?;
    let samples = load_labelled(cfg, rec, &layout)?;
    let seeds: Vec<u64> = (0..cfg.rationalize.runs)
        .map(|i| rec.seed(&format!("study.{i}"), derive_indexed(cfg.seed, "study", i as u64)))
        .collect();
    let study = StudyConfig {
        model: cfg.model.kind,
        options: cfg.model.options.clone(),
        train: cfg.train.clone(),
        seeds,
        split_ratio: cfg.split_ratio,
        jobs: cfg.jobs,
        residual_rule: cfg.rationalize.residual_rule,
    };
    let result = dropout_study(&samples, &layout, &study)?;
    let ranking = rank_beacons(&result);

    let bytes = buffer(|buf| -> std::result::Result<(), csv::Error> {
        let mut rows = csv::Writer::from_writer(buf);
        rows.write_record([
            "rank",
            "beacon",
            "residual_samples",
            "mean_error_ft",
            "delta_ft",
            "removal_improves",
            "error",
        ])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (r, ranked) in ranking.iter().enumerate() {
            let b = result.beacons.iter().find(|b| b.beacon == ranked.beacon).expect("ranked from the study");
            rows.write_record([
                (r + 1).to_string(),
                b.beacon.clone(),
                b.residual_samples.to_string(),
                opt(b.mean_error_ft),
                opt(b.delta_ft),
                ranked.removal_improves.to_string(),
                b.error.clone().unwrap_or_default(),
            ])?;
        }
        rows.flush()?;
        Ok(())
    })?;
    rec.write("study.csv", &bytes)?;
    rec.write_json(
        "study.json",
        &StudyReport {
            baseline_ft: result.baseline_ft,
            seeds: &result.seeds,
            beacons: &result.beacons,
            ranking: &ranking,
        },
    )?;
    let mut summary = vec![format!("baseline {:.2} ft over {} seeds", result.baseline_ft, result.seeds.len())];
    summary.extend(ranking.iter().take(3).map(|r| match r.delta_ft {
        Some(d) => format!("{}: {d:+.2} ft when removed", r.beacon),
        None => format!("{}: failed", r.beacon),
    }));
    Ok(summary)
}

fn synth(cfg: &Config, rec: &mut RunRecord) -> Result<Vec<String>> {
    let layout = load_layout(cfg, rec)?;
    let seed = rec.seed("synth", derive(cfg.seed, "synth"));
    let data = synth_generate(&layout, &cfg.synth, seed)?;
    let labelled = buffer(|b| write_labelled(b, &data.labelled, &layout, false))?;
    let unlabelled = buffer(|b| write_unlabelled(b, &data.unlabelled, &layout))?;
    rec.write("labelled.csv", &labelled)?;
    rec.write("unlabelled.csv", &unlabelled)?;
    rec.write("layout.json", (layout.to_json() + "\n").as_bytes())?;
    Ok(vec![format!(
        "{} labelled rows at {} locations, {} unlabelled rows",
        data.labelled.len(),
        cfg.synth.locations,
        data.unlabelled.len()
    )])
}
