//! The `herdwatch` command-line pipeline.
//!
//! Stages communicate through files in the output directory (`--out`):
//!
//! ```text
//! ingest -> samples.csv -> extract -> features_<w>_<s>.csv -> train -> model.json
//!        -> evaluate -> explain -> stability -> report
//! ```
//!
//! Configuration is layered: built-in defaults, then `--config FILE`, then
//! command-line flags. The seed is mandatory and the hash of the merged
//! configuration is stamped into every artifact.

pub mod commands;
pub mod config;
pub mod store;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::LabelMapping;
use crate::error::{Error, Result};
pub use config::{parse_config_text, RunConfig};
pub use store::{sha256_hex, write_atomic, Store, MANIFEST};

#[derive(Debug, Parser)]
#[command(name = "herdwatch", version, about = "Livestock activity classification from collar accelerometers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, clean and relabel a sample CSV or gateway packet log.
    Ingest(Common),
    /// Build windowed feature tables for every configured window/step.
    Extract(Common),
    /// Cross-validated grid search; refits and saves the selected models.
    Train(Common),
    /// Score the saved models on the held-out test split.
    Evaluate(Common),
    /// Per-class Shapley attributions for the selected model.
    Explain(Common),
    /// KS train/test stability of the top attributed features.
    Stability(Common),
    /// Plain-text summary of every report.
    Report(Common),
    /// Every stage from ingest to report.
    Run(Common),
    /// Write a synthetic herd to `--input` (or `<out>/synthetic.csv`).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SynthFormat::Csv)]
        format: SynthFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthFormat {
    Csv,
    Packets,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Random seed (required, here or in the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts and reports.
    #[arg(long, default_value = "herdwatch-out")]
    pub out: PathBuf,
    /// Input file: samples CSV or packet log for ingest, samples CSV for extract.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Single window length in samples; replaces the configured list.
    #[arg(long, requires = "step")]
    pub window: Option<usize>,
    /// Step length paired with `--window`.
    #[arg(long, requires = "window")]
    pub step: Option<usize>,
    /// Label mapping override file (`OLD=NEW` lines).
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Any configuration key, e.g. `--set cv.folds=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Common {
    fn flags(&self) -> Result<BTreeMap<String, String>> {
        let mut flags = BTreeMap::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            flags.insert(k.trim().to_string(), v.trim().to_string());
        }
        if let Some(seed) = self.seed {
            flags.insert("seed".into(), seed.to_string());
        }
        if let (Some(w), Some(s)) = (self.window, self.step) {
            flags.insert("windows".into(), format!("{w}/{s}"));
        }
        if let Some(path) = &self.mapping {
            let base = LabelMapping::default();
            let mut m = base.clone();
            m.merge_override_file(path)?;
            for (code, class) in m.pairs() {
                if base.get(code) != Some(class) {
                    flags.insert(format!("mapping.{code}"), class.to_string());
                }
            }
        }
        Ok(flags)
    }

    fn setup(&self) -> Result<(RunConfig, Store)> {
        let cfg = RunConfig::from_file(self.config.as_deref(), self.flags()?)?;
        let store = Store::open(&self.out, cfg.hash(), cfg.seed()?)?;
        Ok((cfg, store))
    }

    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config("this command needs --input FILE".into()))
    }
}

/// Process exit status for an error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Config(_) => 2,
        Error::Io { .. } => 3,
        Error::Schema { .. } | Error::Format { .. } | Error::Truncated { .. } | Error::Checksum { .. } => 4,
        Error::Mapping { .. } => 5,
        Error::MissingArtifact { .. } => 6,
        Error::HashMismatch { .. } => 7,
        Error::Split { .. } | Error::Stratification(_) | Error::Sampling(_) => 8,
        Error::Evaluation(_) | Error::UndefinedAuc(_) | Error::Model(_) | Error::EnumerationCap { .. } => 9,
        Error::Decomposition { .. }
        | Error::Structure(_)
        | Error::Naming(_)
        | Error::UndefinedOrientation
        | Error::Ordering(_) => 10,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::ingest(&cfg, &mut store, c.input()?)
        }
        Command::Extract(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::extract(&cfg, &mut store, c.input.as_deref())
        }
        Command::Train(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::train(&cfg, &mut store)
        }
        Command::Evaluate(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::evaluate(&cfg, &mut store)
        }
        Command::Explain(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::explain(&cfg, &mut store)
        }
        Command::Stability(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::stability(&cfg, &mut store)
        }
        Command::Report(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::report(&cfg, &mut store)
        }
        Command::Run(c) => {
            let (cfg, mut store) = c.setup()?;
            commands::ingest(&cfg, &mut store, c.input()?)?;
            commands::extract(&cfg, &mut store, None)?;
            commands::train(&cfg, &mut store)?;
            commands::evaluate(&cfg, &mut store)?;
            commands::explain(&cfg, &mut store)?;
            commands::stability(&cfg, &mut store)?;
            commands::report(&cfg, &mut store)
        }
        Command::Synth { common, format } => {
            let cfg = RunConfig::from_file(common.config.as_deref(), common.flags()?)?;
            let path = common.input.clone().unwrap_or_else(|| {
                common.out.join(match format {
                    SynthFormat::Csv => "synthetic.csv",
                    SynthFormat::Packets => "synthetic.hwpk",
                })
            });
            commands::synth(&cfg, &path, *format == SynthFormat::Packets)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
/// Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
