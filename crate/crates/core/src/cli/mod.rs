//! The `cascadelab` command line.
//!
//! Every subcommand writes into an `--out` directory and leaves a
//! `run_manifest.json` there recording the command, seed, input hashes and
//! output files. Exit status is 0 on success, 1 on invalid input or usage,
//! 2 on runtime failure.

mod commands;
mod manifest;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use manifest::RunManifest;

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cascadelab", version, about = "Hashtag cascade simulation, calibration and evaluation")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "CASCADELAB_JOBS")]
    pub jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world directory.
    Synth(SynthArgs),
    /// Simulate cascades from given or random seeds.
    Simulate(SimulateArgs),
    /// Fit stickiness per hashtag and model.
    Calibrate(CalibrateArgs),
    /// Score simulated cascades against empirical ones.
    Evaluate(EvaluateArgs),
    /// Full trials: calibrate, simulate, score, compose cmi.
    Trial(TrialArgs),
    /// Interaction regression of cmi on hashtag covariates.
    Regress(RegressArgs),
    /// Optimal and predicted combined models.
    Select(SelectArgs),
    /// Plot-ready summary tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// World parameters (INI, optional `[world]` section).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `rng_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct WorldInput {
    /// World directory written by `synth`.
    #[arg(long)]
    pub world: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub world: WorldInput,
    /// Take seeds (and tags, topics) from these hashtag records.
    #[arg(long, conflicts_with = "random")]
    pub hashtags: Option<PathBuf>,
    /// Number of random seed groups instead of `--hashtags`.
    #[arg(long)]
    pub random: Option<usize>,
    /// Seeds per random group.
    #[arg(long, default_value_t = 10)]
    pub seed_size: usize,
    #[arg(long, default_value = "network+identity")]
    pub model: String,
    /// Overrides the config's stickiness.
    #[arg(long)]
    pub stickiness: Option<f64>,
    /// Simulation parameters (INI, optional `[simulation]` section).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub world: WorldInput,
    #[arg(long)]
    pub hashtags: PathBuf,
    /// `all` or a comma-separated list.
    #[arg(long, default_value = "all")]
    pub models: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Simulated hashtag records.
    #[arg(long)]
    pub sim: PathBuf,
    /// Empirical hashtag records, matched to `--sim` by tag.
    #[arg(long)]
    pub emp: PathBuf,
    /// Model label when a simulated record carries no ground truth.
    #[arg(long, default_value = "sim")]
    pub label: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "evaluation")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    /// Experiment manifest; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub hashtags: Option<PathBuf>,
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `corpus` or `per-hashtag`.
    #[arg(long)]
    pub pooling: Option<String>,
    /// Leave M7 unscored instead of training the size regressor.
    #[arg(long)]
    pub no_size_model: bool,
    #[arg(long, default_value = "trial")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CovariateInputs {
    #[arg(long)]
    pub world: PathBuf,
    #[arg(long)]
    pub hashtags: PathBuf,
    /// Metrics table from `trial` or `evaluate`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, default_value = "corpus")]
    pub pooling: String,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    pub inputs: CovariateInputs,
    #[arg(long, default_value = "regression")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub inputs: CovariateInputs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "selection")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    /// With `--hashtags`, enables the covariate and size tables.
    #[arg(long, requires = "hashtags")]
    pub world: Option<PathBuf>,
    #[arg(long, requires = "world")]
    pub hashtags: Option<PathBuf>,
    #[arg(long, default_value = "corpus")]
    pub pooling: String,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Errors are printed as one line to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return EXIT_OK;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: bad arguments"));
            return EXIT_INVALID;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_INVALID;
        }
        // fails only if a pool already exists, as in repeated in-process calls
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match commands::dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_INVALID
    } else {
        EXIT_FAILURE
    }
}
