use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::report::write_reports;
use super::{
    CalibrateArgs, Command, CovariateInputs, EvaluateArgs, RegressArgs, ReportArgs, RunManifest, SelectArgs,
    SimulateArgs, SynthArgs, TrialArgs,
};
use crate::calibrate::{fit_stickiness_prepared, CalibrationResult};
use crate::cmi::{compose_cmi, CmiReport};
use crate::engine::{PreparedHashtag, SimulationConfig, Variant};
use crate::experiment::{
    batch_records, combined_models, covariate_row, fit_interaction_regression, parse_models, parse_pooling,
    run_trials, train_size_model, write_trials_csv, CovariateTable, ExperimentConfig, ForestParams,
    RegressionObservation, TrialContext, TrialResult, MIN_SIZE_TRAINING,
};
use crate::graph::rewire_configuration_model;
use crate::metrics::{compute_metrics, read_metrics_csv, write_metrics_csv, MetricContext, MetricRecord, SizeModelKind};
use crate::seeds::derive_seed;
use crate::worldio::{
    plant_cascade, read_hashtags_jsonl, sample_seed_group, write_hashtags_jsonl, Hashtag, SynthWorldParams, World,
};
use crate::{Error, Result};

pub(super) fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Trial(a) => trial(a),
        Command::Regress(a) => regress(a),
        Command::Select(a) => select(a),
        Command::Report(a) => report(a),
    }
}

/// Prefixes validation errors with the offending path.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        e if e.is_validation() => Error::invalid(format!("{}: {e}", path.display())),
        e => e,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_world(path: &Path) -> Result<World> {
    if !path.is_dir() {
        return Err(Error::invalid(format!("world directory {} does not exist", path.display())));
    }
    World::load(path).map(|(w, _)| w).map_err(|e| in_file(path, e))
}

fn load_hashtags(path: &Path, world: &World, what: &str) -> Result<Vec<Hashtag>> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(Error::invalid(format!("{what} input {} is empty", path.display())));
    }
    read_hashtags_jsonl(BufReader::new(text.as_bytes()), world).map_err(|e| in_file(path, e))
}

fn sim_config(path: Option<&Path>) -> Result<SimulationConfig> {
    match path {
        Some(p) => SimulationConfig::from_ini(&read_text(p)?).map_err(|e| in_file(p, e)),
        None => Ok(SimulationConfig::default()),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::invalid(format!("cannot create {}: {e}", dir.display())))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut params = match &a.config {
        Some(p) => SynthWorldParams::from_ini(&read_text(p)?).map_err(|e| in_file(p, e))?,
        None => SynthWorldParams::default(),
    };
    if let Some(s) = a.seed {
        params.rng_seed = s;
    }
    params.validate()?;
    out_dir(&a.out)?;
    let generated = crate::worldio::generate_world(&params)?;
    let manifest = generated.world.save(&a.out, Some(&params))?;
    let mut run = RunManifest::new("synth", a.config.as_deref(), Some(params.rng_seed));
    if let Some(c) = &a.config {
        run.input(c)?;
    }
    for name in manifest.files.keys() {
        run.output(name);
    }
    run.output(crate::worldio::MANIFEST_FILE);
    run.write(&a.out)?;
    log::info!(
        "world with {} nodes and {} edges written to {}",
        manifest.nodes,
        manifest.edges,
        a.out.display()
    );
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let world = load_world(&a.world.world)?;
    let model: Variant = a.model.parse()?;
    let mut cfg = sim_config(a.config.as_deref())?;
    if let Some(s) = a.stickiness {
        cfg.stickiness = s;
    }
    cfg.variant = model;
    cfg.validate()?;
    let sources: Vec<(String, Vec<usize>, Option<Hashtag>)> = match (&a.hashtags, a.random) {
        (Some(p), _) => load_hashtags(p, &world, "hashtag")?
            .into_iter()
            .map(|h| (h.spec.tag.clone(), h.spec.seeds.clone(), Some(h)))
            .collect(),
        (None, Some(n)) => (0..n)
            .map(|i| {
                let seeds = sample_seed_group(&world.net, a.seed_size, derive_seed(a.seed, &["seeds", &i.to_string()]))?;
                Ok((format!("synth{i:04}"), seeds, None))
            })
            .collect::<Result<_>>()?,
        (None, None) => return Err(Error::invalid("simulate needs --hashtags or --random N")),
    };
    let out: Vec<Hashtag> = sources
        .into_par_iter()
        .map(|(tag, seeds, source)| {
            let run_cfg = SimulationConfig {
                rng_seed: derive_seed(a.seed, &[&tag, "simulate"]),
                ..cfg.clone()
            };
            let planted = plant_cascade(&world, &tag, seeds, model, cfg.stickiness, &run_cfg)?;
            let mut h = Hashtag::from_cascade(&world, &tag, planted.cascade, 1.0)?;
            h.truth = Some(planted.truth);
            if let Some(src) = source {
                h.topic = src.topic;
                h.semantic_sparsity = src.semantic_sparsity;
                h.semantic_growth = src.semantic_growth;
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    out_dir(&a.out)?;
    let mut w = create(&a.out, "cascades.jsonl")?;
    write_hashtags_jsonl(&out, &world, &mut w)?;
    w.flush()?;
    let mut run = RunManifest::new("simulate", a.config.as_deref(), Some(a.seed));
    run.input(&a.world.world)?;
    if let Some(p) = &a.hashtags {
        run.input(p)?;
    }
    if let Some(c) = &a.config {
        run.input(c)?;
    }
    run.output("cascades.jsonl");
    run.write(&a.out)
}

fn write_calibration_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = (&'a str, Variant, &'a CalibrationResult)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "hashtag",
        "model",
        "stickiness",
        "objective",
        "interval_lo",
        "interval_hi",
        "evaluations",
        "degenerate",
        "at_boundary",
    ])?;
    for (tag, model, c) in rows {
        w.write_record([
            tag,
            model.name(),
            &format!("{:.2}", c.stickiness),
            &c.objective.to_string(),
            &format!("{:.2}", c.coarse_interval.0),
            &format!("{:.2}", c.coarse_interval.1),
            &c.evaluations.to_string(),
            &c.degenerate.to_string(),
            &c.at_boundary.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let world = load_world(&a.world.world)?;
    let hashtags = load_hashtags(&a.hashtags, &world, "hashtag")?;
    let models = parse_models(&a.models)?;
    let base = sim_config(a.config.as_deref())?;
    let fits: Vec<(String, Variant, CalibrationResult)> = hashtags
        .par_iter()
        .map(|h| {
            let tag = h.spec.tag.as_str();
            let rewired = if models.iter().any(|m| m.rewires()) {
                Some(rewire_configuration_model(&world.net, derive_seed(a.seed, &[tag, "rewire"]))?)
            } else {
                None
            };
            models
                .iter()
                .map(|&m| {
                    let net = if m.rewires() { rewired.as_ref().unwrap() } else { &world.net };
                    let cfg = SimulationConfig { variant: m, ..base.clone() };
                    let prep = PreparedHashtag::new(net, &world.ids, &h.spec, m, cfg.delta_mode)?;
                    let fit = fit_stickiness_prepared(&prep, &h.spec, &cfg, derive_seed(a.seed, &[tag, m.name(), "calibrate"]))?;
                    Ok((tag.to_string(), m, fit))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    out_dir(&a.out)?;
    let mut w = create(&a.out, "calibration.csv")?;
    write_calibration_csv(fits.iter().map(|(t, m, c)| (t.as_str(), *m, c)), &mut w)?;
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&a.out, "traces.csv")?);
    w.write_record(["hashtag", "model", "s_h", "sim_uses", "objective"])?;
    for (t, m, c) in &fits {
        for p in &c.trace {
            w.write_record([
                t.as_str(),
                m.name(),
                &format!("{:.2}", p.stickiness),
                &p.sim_uses.to_string(),
                &p.objective.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let mut run = RunManifest::new("calibrate", a.config.as_deref(), Some(a.seed));
    run.input(&a.world.world)?;
    run.input(&a.hashtags)?;
    run.output("calibration.csv");
    run.output("traces.csv");
    run.write(&a.out)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    for (path, what) in [(&a.sim, "simulated"), (&a.emp, "empirical")] {
        if read_text(path)?.trim().is_empty() {
            return Err(Error::invalid(format!("{what} input {} is empty", path.display())));
        }
    }
    let world_path = a
        .world
        .as_ref()
        .ok_or_else(|| Error::invalid("evaluate needs --world to resolve node ids"))?;
    let world = load_world(world_path)?;
    let sims = load_hashtags(&a.sim, &world, "simulated")?;
    let emps = load_hashtags(&a.emp, &world, "empirical")?;
    let ctx = TrialContext::new(&world, a.seed)?;
    let mut runs: std::collections::HashMap<(String, String), usize> = Default::default();
    let jobs: Vec<(usize, &Hashtag, &Hashtag, String, usize)> = sims
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let e = emps
                .iter()
                .find(|e| e.spec.tag == s.spec.tag)
                .ok_or_else(|| Error::invalid(format!("no empirical record for hashtag `{}`", s.spec.tag)))?;
            let model = s.truth.map_or(a.label.clone(), |t| t.variant.name().to_string());
            let run = runs.entry((s.spec.tag.clone(), model.clone())).or_default();
            *run += 1;
            Ok((i, s, e, model, *run - 1))
        })
        .collect::<Result<_>>()?;
    let records: Vec<MetricRecord> = jobs
        .into_par_iter()
        .map(|(i, s, e, model, run)| {
            let mut mc = MetricContext::new(&world.net, &world.ids, &world.regions, &ctx.positions);
            mc.sample_rate = e.spec.sample_rate;
            mc.rng_seed = derive_seed(a.seed, &["evaluate", &i.to_string()]);
            let metrics = compute_metrics(&s.empirical, &e.empirical, &mc)
                .map_err(|err| Error::invalid(format!("hashtag `{}`: {err}", s.spec.tag)))?;
            Ok(MetricRecord {
                hashtag: s.spec.tag.clone(),
                model,
                run,
                metrics,
            })
        })
        .collect::<Result<_>>()?;
    out_dir(&a.out)?;
    let mut w = create(&a.out, "metrics.csv")?;
    write_metrics_csv(&records, &mut w)?;
    w.flush()?;
    let mut run = RunManifest::new("evaluate", None, Some(a.seed));
    run.input(world_path)?;
    run.input(&a.sim)?;
    run.input(&a.emp)?;
    run.output("metrics.csv");
    run.write(&a.out)
}

fn trial(a: &TrialArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_ini(&read_text(p)?).map_err(|e| in_file(p, e))?,
        None => ExperimentConfig::default(),
    };
    if let Some(w) = &a.world {
        cfg.world = Some(w.clone());
    }
    if let Some(h) = &a.hashtags {
        cfg.hashtags = Some(h.clone());
    }
    if let Some(m) = &a.models {
        cfg.trial.models = parse_models(m)?;
    }
    if let Some(r) = a.runs {
        if r == 0 {
            return Err(Error::invalid("--runs must be at least 1"));
        }
        cfg.trial.runs = r;
    }
    if let Some(s) = a.seed {
        cfg.trial.master_seed = s;
    }
    if let Some(p) = &a.pooling {
        cfg.pooling = parse_pooling(p)?;
    }
    let world_path = cfg.world.clone().ok_or_else(|| Error::invalid("trial needs --world or a config `world`"))?;
    let hashtags_path = cfg
        .hashtags
        .clone()
        .ok_or_else(|| Error::invalid("trial needs --hashtags or a config `hashtags`"))?;
    let world = load_world(&world_path)?;
    let hashtags = load_hashtags(&hashtags_path, &world, "hashtag")?;
    let seed = cfg.trial.master_seed;
    let mut ctx = TrialContext::new(&world, seed)?;
    if !a.no_size_model {
        if hashtags.len() >= MIN_SIZE_TRAINING {
            ctx.size_model = Some(train_size_model(
                &world,
                &hashtags,
                SizeModelKind::default(),
                derive_seed(seed, &["size-model"]),
            )?);
        } else {
            log::info!("fewer than {MIN_SIZE_TRAINING} hashtags; m7 left unscored");
        }
    }
    let trials = run_trials(&ctx, &hashtags, &cfg.trial)?;
    let records = batch_records(&trials);
    let report = if records.is_empty() { None } else { Some(compose_cmi(&records, cfg.pooling)?) };

    out_dir(&a.out)?;
    let mut w = create(&a.out, "trials.csv")?;
    write_trials_csv(&trials, report.as_ref(), &mut w)?;
    w.flush()?;
    let mut w = create(&a.out, "metrics.csv")?;
    write_metrics_csv(&records, &mut w)?;
    w.flush()?;
    if let Some(r) = &report {
        let mut w = create(&a.out, "cmi.csv")?;
        r.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = create(&a.out, "calibration.csv")?;
    write_calibration_csv(trial_fits(&trials), &mut w)?;
    w.flush()?;

    let mut run = RunManifest::new("trial", a.config.as_deref(), Some(seed));
    run.input(&world_path)?;
    run.input(&hashtags_path)?;
    if let Some(c) = &a.config {
        run.input(c)?;
    }
    for name in ["trials.csv", "metrics.csv", "cmi.csv", "calibration.csv"] {
        if name != "cmi.csv" || report.is_some() {
            run.output(name);
        }
    }
    run.write(&a.out)?;
    let failed: Vec<String> = trials
        .iter()
        .flat_map(|t| t.models.iter().filter(|m| m.error.is_some()).map(move |m| format!("{}/{}", t.hashtag, m.model)))
        .collect();
    if !failed.is_empty() {
        log::warn!("{} model fits failed: {}", failed.len(), failed.join(", "));
    }
    Ok(())
}

fn trial_fits(trials: &[TrialResult]) -> impl Iterator<Item = (&str, Variant, &CalibrationResult)> {
    trials.iter().flat_map(|t| {
        t.models
            .iter()
            .filter_map(move |m| m.calibration.as_ref().map(|c| (t.hashtag.as_str(), m.model, c)))
    })
}

struct CovariateData {
    report: CmiReport,
    table: CovariateTable,
}

fn load_covariate_inputs(inputs: &CovariateInputs, seed: u64) -> Result<CovariateData> {
    let world = load_world(&inputs.world)?;
    let hashtags = load_hashtags(&inputs.hashtags, &world, "hashtag")?;
    let text = read_text(&inputs.metrics)?;
    let records = read_metrics_csv(text.as_bytes()).map_err(|e| in_file(&inputs.metrics, e))?;
    if records.is_empty() {
        return Err(Error::invalid(format!("metrics input {} is empty", inputs.metrics.display())));
    }
    let report = compose_cmi(&records, parse_pooling(&inputs.pooling)?)?;
    let ctx = TrialContext::new(&world, seed)?;
    let rows = hashtags
        .iter()
        .map(|h| covariate_row(&world, &ctx.positions, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(CovariateData {
        report,
        table: CovariateTable::from_rows(&rows)?,
    })
}

fn regress(a: &RegressArgs) -> Result<()> {
    let data = load_covariate_inputs(&a.inputs, 0)?;
    let obs = data
        .report
        .rows
        .iter()
        .filter_map(|r| r.cmi.map(|c| (r, c)))
        .map(|(r, cmi)| {
            Ok(RegressionObservation {
                hashtag: r.hashtag.clone(),
                model: r.model.parse()?,
                cmi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = fit_interaction_regression(&data.table, &obs)?;
    out_dir(&a.out)?;
    let mut w = create(&a.out, "regression.csv")?;
    result.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&a.out, "covariates.csv")?;
    data.table.write_csv(&mut w)?;
    w.flush()?;
    let mut run = RunManifest::new("regress", None, None);
    for p in [&a.inputs.world, &a.inputs.hashtags, &a.inputs.metrics] {
        run.input(p)?;
    }
    run.output("regression.csv");
    run.output("covariates.csv");
    run.write(&a.out)
}

fn select(a: &SelectArgs) -> Result<()> {
    let data = load_covariate_inputs(&a.inputs, a.seed)?;
    let params = ForestParams {
        trees: a.trees,
        ..ForestParams::default()
    };
    let combined = combined_models(&data.report, &data.table, a.folds, a.repeats, &params, a.seed)?;
    out_dir(&a.out)?;
    let mut f = create(&a.out, "selector.json")?;
    serde_json::to_writer_pretty(&mut f, &combined)?;
    f.write_all(b"\n")?;
    f.flush()?;
    let mut w = csv::Writer::from_writer(create(&a.out, "selection.csv")?);
    let mut header = vec!["hashtag".to_string(), "optimal".into(), "predicted".into()];
    header.extend(combined.models.iter().map(|m| format!("cmi_{m}")));
    w.write_record(&header)?;
    for r in &combined.rows {
        let mut row = vec![r.hashtag.clone(), r.optimal.clone(), r.predicted.clone()];
        row.extend(r.cmi.iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let mut run = RunManifest::new("select", None, Some(a.seed));
    for p in [&a.inputs.world, &a.inputs.hashtags, &a.inputs.metrics] {
        run.input(p)?;
    }
    run.output("selector.json");
    run.output("selection.csv");
    run.write(&a.out)
}

fn report(a: &ReportArgs) -> Result<()> {
    let text = read_text(&a.metrics)?;
    let records = read_metrics_csv(text.as_bytes()).map_err(|e| in_file(&a.metrics, e))?;
    if records.is_empty() {
        return Err(Error::invalid(format!("metrics input {} is empty", a.metrics.display())));
    }
    let report = compose_cmi(&records, parse_pooling(&a.pooling)?)?;
    let extra = match (&a.world, &a.hashtags) {
        (Some(w), Some(h)) => {
            let world = load_world(w)?;
            let hashtags = load_hashtags(h, &world, "hashtag")?;
            let ctx = TrialContext::new(&world, 0)?;
            let rows = hashtags
                .iter()
                .map(|h| covariate_row(&world, &ctx.positions, h))
                .collect::<Result<Vec<_>>>()?;
            Some((rows, hashtags))
        }
        _ => None,
    };
    out_dir(&a.out)?;
    let written = write_reports(&report, extra.as_ref().map(|(r, h)| (r.as_slice(), h.as_slice())), &a.out)?;
    let mut run = RunManifest::new("report", None, None);
    run.input(&a.metrics)?;
    if let (Some(w), Some(h)) = (&a.world, &a.hashtags) {
        run.input(w)?;
        run.input(h)?;
    }
    for name in written {
        run.output(name);
    }
    run.write(&a.out)
}
