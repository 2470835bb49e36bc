//! Trials, hashtag covariates, the interaction regression and combined
//! model selection.

mod adopters;
mod covariates;
mod regression;
mod selector;
mod semantic;
mod trial;

use std::path::PathBuf;

pub use adopters::{detect_initial_adopters, CascadeStart};
pub use covariates::{covariate_row, CovariateRow, CovariateTable};
pub use regression::{fit_interaction_regression, Coefficient, RegressionObservation, RegressionResult};
pub use selector::{
    combined_models, cross_validate, CombinedModels, CvResult, ForestParams, RandomForest, SelectionRow,
};
pub use semantic::{average_ranks, cosine, semantic_covariates, spearman, SemanticCovariates};
pub use trial::{
    batch_records, run_trial, run_trials, train_size_model, write_trials_csv, ModelOutcome, RunOutcome,
    TrialConfig, TrialContext, TrialResult, MIN_SIZE_TRAINING,
};

use crate::cmi::Pooling;
use crate::engine::{SimulationConfig, Variant};
use crate::{Error, Result};

/// Experiment manifest: an `[experiment]` section plus optional
/// `[simulation]` overrides.
///
/// ```ini
/// [experiment]
/// world = world/
/// hashtags = hashtags.jsonl
/// models = all
/// runs = 5
/// folds = 5
/// repeats = 10
/// seed = 7
/// pooling = corpus
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: Option<PathBuf>,
    pub hashtags: Option<PathBuf>,
    pub trial: TrialConfig,
    pub folds: usize,
    pub repeats: usize,
    pub pooling: Pooling,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: None,
            hashtags: None,
            trial: TrialConfig::default(),
            folds: 5,
            repeats: 10,
            pooling: Pooling::Corpus,
        }
    }
}

/// `all` or a comma-separated list of model names.
pub fn parse_models(s: &str) -> Result<Vec<Variant>> {
    if s.trim() == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    let mut models = Vec::new();
    for part in s.split(',') {
        let m: Variant = part.parse()?;
        if !models.contains(&m) {
            models.push(m);
        }
    }
    if models.is_empty() {
        return Err(Error::invalid("no models given"));
    }
    Ok(models)
}

pub fn parse_pooling(s: &str) -> Result<Pooling> {
    match s.trim() {
        "corpus" => Ok(Pooling::Corpus),
        "per-hashtag" => Ok(Pooling::PerHashtag),
        other => Err(Error::invalid(format!("unknown pooling `{other}` (expected corpus or per-hashtag)"))),
    }
}

impl ExperimentConfig {
    pub fn from_ini(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::invalid(format!("experiment config: {e}")))?;
        let mut cfg = ExperimentConfig::default();
        let sim_text = {
            let mut s = String::new();
            if let Some(props) = ini.section(Some("simulation")) {
                for (k, v) in props.iter() {
                    s.push_str(&format!("{k} = {v}\n"));
                }
            }
            s
        };
        cfg.trial.sim = SimulationConfig::from_ini(&sim_text)?;
        if let Some(props) = ini.section(Some("experiment")) {
            for (key, value) in props.iter() {
                let value = value.trim();
                let num = |v: &str| -> Result<usize> {
                    v.parse()
                        .map_err(|_| Error::invalid(format!("experiment key `{key}`: cannot parse `{v}`")))
                };
                match key.trim() {
                    "world" => cfg.world = Some(value.into()),
                    "hashtags" => cfg.hashtags = Some(value.into()),
                    "models" => cfg.trial.models = parse_models(value)?,
                    "runs" => cfg.trial.runs = num(value)?,
                    "folds" => cfg.folds = num(value)?,
                    "repeats" => cfg.repeats = num(value)?,
                    "kl_bins" => cfg.trial.kl_bins = num(value)?,
                    "seed" => {
                        cfg.trial.master_seed = value
                            .parse()
                            .map_err(|_| Error::invalid(format!("experiment key `seed`: cannot parse `{value}`")))?
                    }
                    "pooling" => cfg.pooling = parse_pooling(value)?,
                    other => return Err(Error::invalid(format!("unknown experiment key `{other}`"))),
                }
            }
        }
        if cfg.trial.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        Ok(cfg)
    }
}
