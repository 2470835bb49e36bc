//! Per-hashtag stickiness fitting by a two-level grid search on cascade size.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{PreparedHashtag, SimulationConfig};
use crate::graph::Network;
use crate::identity::{HashtagSpec, IdentityMatrix};
use crate::seeds::derive_seed;
use crate::{Error, Result};

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub stickiness: f64,
    pub sim_uses: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub stickiness: f64,
    pub objective: f64,
    pub coarse_interval: (f64, f64),
    pub evaluations: usize,
    /// No grid point produced any use beyond the seeds.
    pub degenerate: bool,
    /// The fit sits on an end of the search range.
    pub at_boundary: bool,
    /// All evaluated points in ascending stickiness.
    pub trace: Vec<GridPoint>,
}

impl CalibrationResult {
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s_h", "sim_uses", "objective"])?;
        for p in &self.trace {
            w.write_record([
                format!("{:.2}", p.stickiness),
                p.sim_uses.to_string(),
                p.objective.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `|log10(sim_uses * sample_rate / empirical_size)|`.
pub fn size_objective(sim_uses: usize, sample_rate: f64, empirical_size: u64) -> f64 {
    (sim_uses as f64 * sample_rate / empirical_size as f64).log10().abs()
}

/// Prepares the similarity terms for `base_cfg.variant` and fits. For the
/// identity-only variant pass the rewired network.
pub fn fit_stickiness(
    net: &Network,
    ids: &IdentityMatrix,
    spec: &HashtagSpec,
    base_cfg: &SimulationConfig,
    rng_seed: u64,
) -> Result<CalibrationResult> {
    let prep = PreparedHashtag::new(net, ids, spec, base_cfg.variant, base_cfg.delta_mode)?;
    fit_stickiness_prepared(&prep, spec, base_cfg, rng_seed)
}

/// Coarse pass over 0.1, 0.2, ..., 1.0, then a 0.01-step pass over the
/// width-0.1 interval formed by the coarse winner and its better neighbor.
/// One run per grid point; ties go to the smaller stickiness.
pub fn fit_stickiness_prepared(
    prep: &PreparedHashtag<'_>,
    spec: &HashtagSpec,
    base_cfg: &SimulationConfig,
    rng_seed: u64,
) -> Result<CalibrationResult> {
    if spec.empirical_size == 0 {
        return Err(Error::invalid(format!("hashtag `{}` has empirical size 0", spec.tag)));
    }
    if !(spec.sample_rate > 0.0 && spec.sample_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "hashtag `{}` sample rate {} outside (0, 1]",
            spec.tag, spec.sample_rate
        )));
    }
    let seed_uses = {
        let mut s = spec.seeds.clone();
        s.sort_unstable();
        s.dedup();
        s.len()
    };

    // keyed by hundredths so both passes share evaluations
    let mut evaluated: BTreeMap<u32, GridPoint> = BTreeMap::new();
    let evaluate = |points: Vec<u32>| -> Result<Vec<GridPoint>> {
        points
            .into_par_iter()
            .map(|k| {
                let s = k as f64 / 100.0;
                let cfg = SimulationConfig {
                    stickiness: s,
                    rng_seed: derive_seed(rng_seed, &["calibrate", &k.to_string()]),
                    ..base_cfg.clone()
                };
                let uses = prep.simulate(&cfg)?.uses();
                Ok(GridPoint {
                    stickiness: s,
                    sim_uses: uses,
                    objective: size_objective(uses, spec.sample_rate, spec.empirical_size),
                })
            })
            .collect()
    };

    let coarse: Vec<u32> = (1..=10).map(|i| i * 10).collect();
    for p in evaluate(coarse.clone())? {
        evaluated.insert(hundredths(p.stickiness), p);
    }
    let coarse_obj: Vec<f64> = coarse.iter().map(|k| evaluated[k].objective).collect();
    let best = argmin(&coarse_obj);
    let neighbor = match best {
        0 => 1,
        9 => 8,
        b if coarse_obj[b + 1] < coarse_obj[b - 1] => b + 1,
        b => b - 1,
    };
    let (lo, hi) = (coarse[best.min(neighbor)], coarse[best.max(neighbor)]);

    let fine: Vec<u32> = (lo..=hi).filter(|k| !evaluated.contains_key(k)).collect();
    for p in evaluate(fine)? {
        evaluated.insert(hundredths(p.stickiness), p);
    }
    let window: Vec<GridPoint> = (lo..=hi).map(|k| evaluated[&k]).collect();
    let winner = window[argmin(&window.iter().map(|p| p.objective).collect::<Vec<_>>())];

    let degenerate = evaluated.values().all(|p| p.sim_uses <= seed_uses);
    let (stickiness, objective) = if degenerate {
        log::warn!(
            "hashtag `{}`: no grid point spread beyond the seeds; stickiness set to 0.1",
            spec.tag
        );
        (0.1, evaluated[&10].objective)
    } else {
        (winner.stickiness, winner.objective)
    };
    Ok(CalibrationResult {
        stickiness,
        objective,
        coarse_interval: (lo as f64 / 100.0, hi as f64 / 100.0),
        evaluations: evaluated.len(),
        degenerate,
        at_boundary: stickiness <= 0.1 || stickiness >= 1.0,
        trace: evaluated.into_values().collect(),
    })
}

fn hundredths(s: f64) -> u32 {
    (s * 100.0).round() as u32
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
