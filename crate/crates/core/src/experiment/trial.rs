use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::calibrate::{fit_stickiness_prepared, CalibrationResult};
use crate::cmi::CmiReport;
use crate::engine::{Cascade, PreparedHashtag, SimulationConfig, Variant};
use crate::graph::{node_position_features, rewire_configuration_model, NodePositionFeatures, PositionOptions};
use crate::metrics::{
    compute_metrics, size_features, MetricContext, MetricRecord, MetricVector, SizeModelKind, SizeRegressor,
    KL_BINS, METRIC_COUNT,
};
use crate::seeds::derive_seed;
use crate::worldio::{Hashtag, World};
use crate::{Error, Result};

/// World-level data shared by every trial.
#[derive(Debug, Clone)]
pub struct TrialContext<'a> {
    pub world: &'a World,
    pub positions: Vec<NodePositionFeatures>,
    pub size_model: Option<SizeRegressor>,
}

impl<'a> TrialContext<'a> {
    pub fn new(world: &'a World, rng_seed: u64) -> Result<Self> {
        let opts = PositionOptions {
            rng_seed,
            ..PositionOptions::default()
        };
        Ok(TrialContext {
            world,
            positions: node_position_features(&world.net, &opts)?,
            size_model: None,
        })
    }
}

/// Minimum number of empirical cascades to train the size regressor.
pub const MIN_SIZE_TRAINING: usize = 5;

/// Regressor from early-adopter features to the empirical size, trained on
/// the given hashtags' empirical cascades.
pub fn train_size_model(world: &World, hashtags: &[Hashtag], kind: SizeModelKind, rng_seed: u64) -> Result<SizeRegressor> {
    if hashtags.len() < MIN_SIZE_TRAINING {
        return Err(Error::invalid(format!(
            "size model needs at least {MIN_SIZE_TRAINING} hashtags, got {}",
            hashtags.len()
        )));
    }
    let features: Vec<Vec<f64>> = hashtags
        .iter()
        .map(|h| size_features(&h.empirical, &world.net, &world.ids))
        .collect();
    let sizes: Vec<f64> = hashtags.iter().map(|h| h.empirical.uses() as f64).collect();
    SizeRegressor::fit(&features, &sizes, kind, rng_seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub models: Vec<Variant>,
    pub runs: usize,
    pub sim: SimulationConfig,
    pub master_seed: u64,
    pub kl_bins: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            models: Variant::ALL.to_vec(),
            runs: 5,
            sim: SimulationConfig::default(),
            master_seed: 0,
            kl_bins: KL_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub rng_seed: u64,
    pub cascade: Cascade,
    /// `None` when the comparison itself failed.
    pub metrics: Option<MetricVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub model: Variant,
    pub calibration: Option<CalibrationResult>,
    pub runs: Vec<RunOutcome>,
    /// Set when the model could not be fitted or simulated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub hashtag: String,
    pub empirical_uses: usize,
    pub models: Vec<ModelOutcome>,
}

impl TrialResult {
    pub fn metric_records(&self) -> Vec<MetricRecord> {
        self.models
            .iter()
            .flat_map(|m| {
                m.runs.iter().filter_map(move |r| {
                    Some(MetricRecord {
                        hashtag: self.hashtag.clone(),
                        model: m.model.name().to_string(),
                        run: r.run,
                        metrics: r.metrics?,
                    })
                })
            })
            .collect()
    }
}

/// Seed the models at the hashtag's seeds, fit stickiness once per model,
/// then simulate `runs` times at the fitted value and score each run
/// against the empirical cascade. The identity-only model gets one
/// rewiring per trial, shared by its calibration and runs.
pub fn run_trial(ctx: &TrialContext<'_>, hashtag: &Hashtag, cfg: &TrialConfig) -> Result<TrialResult> {
    if hashtag.empirical.is_empty() {
        return Err(Error::invalid(format!("hashtag `{}` has an empty empirical cascade", hashtag.spec.tag)));
    }
    if cfg.runs == 0 || cfg.models.is_empty() {
        return Err(Error::invalid("a trial needs at least one model and one run"));
    }
    cfg.sim.validate()?;
    let tag = hashtag.spec.tag.as_str();
    let world = ctx.world;
    let rewired = if cfg.models.iter().any(|m| m.rewires()) {
        Some(rewire_configuration_model(&world.net, derive_seed(cfg.master_seed, &[tag, "rewire"]))?)
    } else {
        None
    };
    let models = cfg
        .models
        .iter()
        .map(|&model| {
            let net = if model.rewires() { rewired.as_ref().unwrap() } else { &world.net };
            match run_model(ctx, net, hashtag, model, cfg) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("hashtag `{tag}`, model {model}: {e}");
                    ModelOutcome {
                        model,
                        calibration: None,
                        runs: Vec::new(),
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(TrialResult {
        hashtag: tag.to_string(),
        empirical_uses: hashtag.empirical.uses(),
        models,
    })
}

fn run_model(
    ctx: &TrialContext<'_>,
    net: &crate::graph::Network,
    hashtag: &Hashtag,
    model: Variant,
    cfg: &TrialConfig,
) -> Result<ModelOutcome> {
    let tag = hashtag.spec.tag.as_str();
    let world = ctx.world;
    let base = SimulationConfig {
        variant: model,
        ..cfg.sim.clone()
    };
    let prep = PreparedHashtag::new(net, &world.ids, &hashtag.spec, model, base.delta_mode)?;
    let calibration = fit_stickiness_prepared(
        &prep,
        &hashtag.spec,
        &base,
        derive_seed(cfg.master_seed, &[tag, model.name(), "calibrate"]),
    )?;
    let mut metric_ctx = MetricContext::new(&world.net, &world.ids, &world.regions, &ctx.positions);
    metric_ctx.size_model = ctx.size_model.as_ref();
    metric_ctx.sample_rate = hashtag.spec.sample_rate;
    metric_ctx.kl_bins = cfg.kl_bins;
    metric_ctx.stop = crate::metrics::StopRule::from_config(&base);
    let runs = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let r = run.to_string();
            let rng_seed = derive_seed(cfg.master_seed, &[tag, model.name(), "run", &r]);
            let run_cfg = SimulationConfig {
                stickiness: calibration.stickiness,
                rng_seed,
                ..base.clone()
            };
            let cascade = prep.simulate(&run_cfg)?;
            let mut mc = metric_ctx;
            mc.rng_seed = derive_seed(cfg.master_seed, &[tag, model.name(), "metrics", &r]);
            let metrics = match compute_metrics(&cascade, &hashtag.empirical, &mc) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("hashtag `{tag}`, model {model}, run {run}: {e}");
                    None
                }
            };
            Ok(RunOutcome {
                run,
                rng_seed,
                cascade,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelOutcome {
        model,
        calibration: Some(calibration),
        runs,
        error: None,
    })
}

/// Trials run concurrently; results keep the input order.
pub fn run_trials(ctx: &TrialContext<'_>, hashtags: &[Hashtag], cfg: &TrialConfig) -> Result<Vec<TrialResult>> {
    hashtags.par_iter().map(|h| run_trial(ctx, h, cfg)).collect()
}

pub fn batch_records(trials: &[TrialResult]) -> Vec<MetricRecord> {
    trials.iter().flat_map(TrialResult::metric_records).collect()
}

/// One row per (hashtag, model, run), with failed models as a single
/// flagged row.
pub fn write_trials_csv<W: Write>(trials: &[TrialResult], cmi: Option<&CmiReport>, out: W) -> Result<()> {
    let lookup: HashMap<(&str, &str, usize), Option<f64>> = cmi
        .map(|r| {
            r.rows
                .iter()
                .map(|row| ((row.hashtag.as_str(), row.model.as_str(), row.run), row.cmi))
                .collect()
        })
        .unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["hashtag", "model", "run", "stickiness", "sim_uses", "emp_uses"]
        .map(String::from)
        .to_vec();
    header.extend((1..=METRIC_COUNT).map(|k| format!("m{k}")));
    header.extend(["flags", "cmi", "error"].map(String::from));
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for t in trials {
        for m in &t.models {
            let stickiness = cell(m.calibration.as_ref().map(|c| c.stickiness));
            if let Some(err) = &m.error {
                let mut row = vec![t.hashtag.clone(), m.model.name().into(), String::new(), stickiness.clone()];
                row.extend(std::iter::repeat_n(String::new(), 2 + METRIC_COUNT + 2));
                row.push(err.clone());
                w.write_record(&row)?;
                continue;
            }
            for r in &m.runs {
                let mut row = vec![
                    t.hashtag.clone(),
                    m.model.name().into(),
                    r.run.to_string(),
                    stickiness.clone(),
                    r.cascade.uses().to_string(),
                    t.empirical_uses.to_string(),
                ];
                let values = r.metrics.map(|v| v.values).unwrap_or([None; METRIC_COUNT]);
                row.extend(values.iter().map(|&v| cell(v)));
                row.push(r.metrics.map_or("0".repeat(METRIC_COUNT), |v| v.flags()));
                let c = lookup.get(&(t.hashtag.as_str(), m.model.name(), r.run)).copied().flatten();
                row.push(cell(c));
                row.push(String::new());
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
