//! Command-line orchestration for the fingerloc toolkit: configuration,
//! run manifests and report files.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fingerloc::{ModelKind, Protocol, Strategy};

pub use commands::{execute, replay, Outcome};
pub use config::Config;
pub use error::{exit_code, CliError, Result};
pub use manifest::{FileDigest, RunManifest, RunRecord, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "fingerloc", version, about = "RSSI fingerprint localization experiments")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train a localizer; writes the model, metrics and error CDF.
    Train,
    /// Hyperparameter search; writes the trial table and the best config.
    Tune,
    /// Augment the labelled set; writes the augmented CSV and counts.
    Augment {
        /// Also compare trained models with and without augmentation.
        #[arg(long)]
        evaluate: bool,
    },
    /// Beacon dropout study; writes per-beacon deltas and a ranking.
    Rationalize,
    /// Generate a synthetic corpus and its layout.
    Synth,
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Tune => "tune",
            Command::Augment { .. } => "augment",
            Command::Rationalize => "rationalize",
            Command::Synth => "synth",
            Command::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dnn,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    None,
    Naive,
    Autoencoder,
    Hybrid,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::None => Strategy::None,
            StrategyArg::Naive => Strategy::Naive,
            StrategyArg::Autoencoder => Strategy::Autoencoder,
            StrategyArg::Hybrid => Strategy::Hybrid,
        }
    }
}

/// Overrides applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub labelled: Option<PathBuf>,
    #[arg(long, global = true)]
    pub unlabelled: Option<PathBuf>,
    /// Beacon layout JSON; the built-in library layout otherwise.
    #[arg(long, global = true)]
    pub layout: Option<PathBuf>,
    /// Default location of the corpus CSVs.
    #[arg(long, global = true, env = "FINGERLOC_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value = "fingerloc-out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, global = true, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long, global = true, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Augment the whole labelled set before splitting.
    #[arg(long, global = true)]
    pub paper_protocol: bool,
}

impl Flags {
    /// Loads the config file (if any) and applies the flags.
    pub fn resolve(&self, command: &Command) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(p) = &self.labelled {
            cfg.data.labelled = Some(p.clone());
        }
        if let Some(p) = &self.unlabelled {
            cfg.data.unlabelled = Some(p.clone());
        }
        if let Some(p) = &self.layout {
            cfg.data.layout = Some(p.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(m) = self.model {
            cfg.model.kind = match m {
                ModelArg::Dnn => ModelKind::Dnn,
                ModelArg::Cnn => ModelKind::Cnn,
            };
        }
        if let Some(o) = self.optimizer {
            let name = match o {
                OptimizerArg::Adam => "adam",
                OptimizerArg::Sgd => "sgd",
            };
            cfg.train.optimizer = config::with_optimizer(&cfg.train.optimizer, name);
        }
        if let Some(s) = self.strategy {
            cfg.augment.strategy = s.into();
        }
        if self.paper_protocol {
            cfg.augment.protocol = Protocol::PoolThenSplit;
        }
        if let Command::Augment { evaluate: true } = *command {
            cfg.augment.evaluate = true;
        }
        cfg.resolve_paths(self.data_dir.as_deref())?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Replay { manifest } => replay(manifest, &cli.flags.out_dir, cli.flags.jobs),
        command => {
            let cfg = cli.flags.resolve(command)?;
            execute(command.name(), &cfg, &cli.flags.out_dir)
        }
    }
}
