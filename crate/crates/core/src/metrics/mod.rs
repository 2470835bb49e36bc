//! Cascade-comparison measures.
//!
//! | metric | compares | via |
//! |---|---|---|
//! | M1 | total uses (raw) | [`log_ratio_error`] with the sample rate |
//! | M2 | distinct adopters | [`log_ratio_error`] |
//! | M3 | mean hop distance from adopters to the nearest seed | [`relative_error`] |
//! | M4 | usage-over-time curves | [`dtw_distance`] |
//! | M5 | uses per adopter | [`relative_error`] |
//! | M6 | edge density among adopters | [`log_ratio_error`] |
//! | M7 | predicted final size from early adopters | [`relative_error`] |
//! | M8 | adopter identities | [`propensity_kl`] |
//! | M9 | regional adoption | [`lee_l_normalized`] |
//! | M10 | adopter network position | [`propensity_kl`] |
//!
//! M1 uses the raw cascades; every other metric compares the smaller
//! cascade with a uniform event subsample of the larger one.

mod primitives;
mod propensity;
mod regions;
mod size_model;

use std::io::{Read, Write};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::engine::{Cascade, SimulationConfig};
use crate::graph::{adopter_edge_density, nearest_seed_distances, Network, NodePositionFeatures};
use crate::identity::IdentityMatrix;
use crate::seeds::rng_from_seed;
use crate::{Error, Result};

pub use primitives::{
    dtw_distance, histogram_kl, lee_l, lee_l_normalized, log_ratio_error, rebin, relative_error,
    stop_rule_length, SpatialWeights,
};
pub use propensity::{propensity_kl, propensity_scores, KL_BINS, KL_SMOOTHING, LOGISTIC_PENALTY};
pub use regions::RegionMap;
pub use size_model::{size_features, SizeModelKind, SizeRegressor, FIRST_ADOPTERS};

pub const METRIC_COUNT: usize = 10;
pub const REGION_SMOOTHING: f64 = 0.5;

/// M1..M10; `None` marks a metric that is undefined for this pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricVector {
    pub values: [Option<f64>; METRIC_COUNT],
}

impl MetricVector {
    /// Metric `k` in `1..=10`.
    pub fn get(&self, k: usize) -> Option<f64> {
        self.values[k - 1]
    }

    /// `1` for valid entries, `0` otherwise, in metric order.
    pub fn flags(&self) -> String {
        self.values.iter().map(|v| if v.is_some() { '1' } else { '0' }).collect()
    }
}

/// Stopping rule applied to usage curves before M4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub warmup: usize,
    pub window: usize,
    pub growth: f64,
}

impl StopRule {
    pub fn from_config(cfg: &SimulationConfig) -> Self {
        StopRule {
            warmup: cfg.warmup as usize,
            window: cfg.stop_window as usize,
            growth: cfg.stop_growth,
        }
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::from_config(&SimulationConfig::default())
    }
}

/// Shared read-only inputs for metric evaluation.
#[derive(Debug, Clone, Copy)]
pub struct MetricContext<'a> {
    pub net: &'a Network,
    pub ids: &'a IdentityMatrix,
    pub regions: &'a RegionMap,
    pub positions: &'a [NodePositionFeatures],
    /// M7 is flagged invalid without a trained regressor.
    pub size_model: Option<&'a SizeRegressor>,
    pub sample_rate: f64,
    pub rng_seed: u64,
    pub stop: StopRule,
    pub kl_bins: usize,
}

impl<'a> MetricContext<'a> {
    pub fn new(
        net: &'a Network,
        ids: &'a IdentityMatrix,
        regions: &'a RegionMap,
        positions: &'a [NodePositionFeatures],
    ) -> Self {
        MetricContext {
            net,
            ids,
            regions,
            positions,
            size_model: None,
            sample_rate: 1.0,
            rng_seed: 0,
            stop: StopRule::default(),
            kl_bins: KL_BINS,
        }
    }
}

/// Uniform subsample of `target` events without replacement, in time
/// order. Cascades already at or below `target` are returned unchanged.
pub fn downsample(cascade: &Cascade, target: usize, rng_seed: u64) -> Cascade {
    if cascade.events.len() <= target {
        return cascade.clone();
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut keep = sample(&mut rng, cascade.events.len(), target).into_vec();
    keep.sort_unstable();
    Cascade {
        events: keep.into_iter().map(|i| cascade.events[i]).collect(),
        seeds: cascade.seeds.clone(),
        duration: cascade.duration,
    }
}

/// All ten measures for a simulated cascade against an empirical one.
/// Undefined metrics are flagged; the call only fails on unusable inputs.
pub fn compute_metrics(sim: &Cascade, emp: &Cascade, ctx: &MetricContext<'_>) -> Result<MetricVector> {
    if sim.is_empty() {
        return Err(Error::invalid("simulated cascade is empty"));
    }
    if emp.is_empty() {
        return Err(Error::invalid("empirical cascade is empty"));
    }
    ctx.ids.check_network(ctx.net)?;
    ctx.regions.check_network(ctx.net)?;
    if ctx.positions.len() != ctx.net.node_count() {
        return Err(Error::invalid("node position features do not cover the network"));
    }
    sim.check_nodes(ctx.net)?;
    emp.check_nodes(ctx.net)?;

    let mut v = MetricVector::default();
    v.values[0] = log_ratio_error(sim.uses() as f64, emp.uses() as f64, ctx.sample_rate).ok();

    let target = sim.uses().min(emp.uses());
    let sim = downsample(sim, target, ctx.rng_seed);
    let emp = downsample(emp, target, ctx.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let sim_adopters = sim.adopters();
    let emp_adopters = emp.adopters();

    v.values[1] = log_ratio_error(sim_adopters.len() as f64, emp_adopters.len() as f64, 1.0).ok();
    v.values[2] = seed_distance(ctx.net, &sim, &sim_adopters)
        .zip(seed_distance(ctx.net, &emp, &emp_adopters))
        .and_then(|(s, e)| relative_error(s, e).ok());
    v.values[3] = curve_distance(&sim, &emp, ctx.stop);
    v.values[4] = relative_error(
        sim.uses() as f64 / sim_adopters.len() as f64,
        emp.uses() as f64 / emp_adopters.len() as f64,
    )
    .ok();
    v.values[5] = adopter_edge_density(ctx.net, &sim_adopters)
        .ok()
        .zip(adopter_edge_density(ctx.net, &emp_adopters).ok())
        .and_then(|(s, e)| log_ratio_error(s, e, 1.0).ok());
    v.values[6] = ctx.size_model.and_then(|m| {
        let s = m.predict(&size_features(&sim, ctx.net, ctx.ids)).ok()?;
        let e = m.predict(&size_features(&emp, ctx.net, ctx.ids)).ok()?;
        relative_error(s, e).ok()
    });

    let identity_rows = |adopters: &[usize]| -> Vec<Vec<f64>> {
        adopters.iter().map(|&a| ctx.ids.row(a).to_vec()).collect()
    };
    v.values[7] = propensity_kl(&identity_rows(&emp_adopters), &identity_rows(&sim_adopters), ctx.kl_bins).ok();
    v.values[8] = regional_association(ctx.regions, &sim_adopters, &emp_adopters);

    let majority = seed_majority_community(ctx.positions, &emp.seeds);
    let position_rows = |adopters: &[usize]| -> Vec<Vec<f64>> {
        adopters
            .iter()
            .map(|&a| {
                let p = &ctx.positions[a];
                let same = Some(p.community) == majority;
                vec![p.pagerank, p.eigencentrality, p.transitivity, f64::from(u8::from(same))]
            })
            .collect()
    };
    v.values[9] = propensity_kl(&position_rows(&emp_adopters), &position_rows(&sim_adopters), ctx.kl_bins).ok();

    debug_assert!(v.values.iter().flatten().all(|x| x.is_finite()));
    Ok(v)
}

/// Mean nearest-seed distance over non-seed adopters a seed can reach.
fn seed_distance(net: &Network, c: &Cascade, adopters: &[usize]) -> Option<f64> {
    let others: Vec<usize> = adopters.iter().copied().filter(|a| !c.seeds.contains(a)).collect();
    nearest_seed_distances(net, &others, &c.seeds).ok()?.mean()
}

fn curve_distance(sim: &Cascade, emp: &Cascade, stop: StopRule) -> Option<f64> {
    let prepare = |c: &Cascade| {
        let mut curve = c.usage_curve();
        curve.truncate(stop_rule_length(&curve, stop.warmup, stop.window, stop.growth));
        curve
    };
    let (s, e) = (prepare(sim), prepare(emp));
    let bins = s.len().min(e.len());
    if bins == 0 {
        return None;
    }
    let fractions = |curve: &[f64]| {
        let r = rebin(curve, bins);
        let total: f64 = r.iter().sum();
        (total > 0.0).then(|| r.iter().map(|x| x / total).collect::<Vec<_>>())
    };
    dtw_distance(&fractions(&s)?, &fractions(&e)?).ok()
}

/// Smoothed adoption fraction per region.
pub fn region_adoption(regions: &RegionMap, adopters: &[usize]) -> Vec<f64> {
    let agents = regions.agents_per_region();
    let mut hits = vec![0usize; regions.region_count()];
    for &a in adopters {
        hits[regions.region_of(a)] += 1;
    }
    hits.iter()
        .zip(&agents)
        .map(|(&h, &n)| (h as f64 + REGION_SMOOTHING) / (n as f64 + 2.0 * REGION_SMOOTHING))
        .collect()
}

fn regional_association(regions: &RegionMap, sim: &[usize], emp: &[usize]) -> Option<f64> {
    let w = regions.spatial_weights();
    lee_l_normalized(&region_adoption(regions, sim), &region_adoption(regions, emp), &w).ok()
}

/// Most common community among the seeds; ties go to the smaller label.
fn seed_majority_community(positions: &[NodePositionFeatures], seeds: &[usize]) -> Option<usize> {
    let mut counts = std::collections::BTreeMap::new();
    for &s in seeds {
        *counts.entry(positions[s].community).or_insert(0usize) += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(k, _)| k)
}

/// One row of a metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub hashtag: String,
    pub model: String,
    pub run: usize,
    pub metrics: MetricVector,
}

pub fn write_metrics_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["hashtag".to_string(), "model".into(), "run".into()];
    header.extend((1..=METRIC_COUNT).map(|k| format!("m{k}")));
    header.push("flags".into());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.hashtag.clone(), r.model.clone(), r.run.to_string()];
        row.extend(r.metrics.values.iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
        row.push(r.metrics.flags());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 4 + METRIC_COUNT {
            return Err(Error::parse(line, format!("expected {} columns", 4 + METRIC_COUNT)));
        }
        let run = rec[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad run index `{}`", &rec[2])))?;
        let mut metrics = MetricVector::default();
        for k in 0..METRIC_COUNT {
            let cell = rec[3 + k].trim();
            metrics.values[k] = if cell.is_empty() {
                None
            } else {
                Some(cell.parse().map_err(|_| Error::parse(line, format!("bad metric value `{cell}`")))?)
            };
        }
        if metrics.flags() != rec[3 + METRIC_COUNT].trim() {
            return Err(Error::parse(line, "flags do not match metric cells"));
        }
        out.push(MetricRecord {
            hashtag: rec[0].to_string(),
            model: rec[1].to_string(),
            run,
            metrics,
        });
    }
    Ok(out)
}
