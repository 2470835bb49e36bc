//! Composite cascade match index.
//!
//! Each metric is oriented so larger means a better match (every metric but
//! M9 is negated), z-scored over the pool with the population standard
//! deviation, and averaged per row. Zero-variance columns score 0.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::metrics::{MetricRecord, METRIC_COUNT};
use crate::{Error, Result};

/// Metric groups, 1-based and inclusive.
pub const POPULARITY: (usize, usize) = (1, 3);
pub const GROWTH: (usize, usize) = (4, 7);
pub const ADOPTERS: (usize, usize) = (8, 10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One pool over the whole batch.
    #[default]
    Corpus,
    /// A separate pool per hashtag.
    PerHashtag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmiRow {
    pub hashtag: String,
    pub model: String,
    pub run: usize,
    pub z: [Option<f64>; METRIC_COUNT],
    /// `None` when the row has no valid metric.
    pub cmi: Option<f64>,
    pub popularity: Option<f64>,
    pub growth: Option<f64>,
    pub adopters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmiReport {
    pub rows: Vec<CmiRow>,
    /// Metrics (1-based) invalid across an entire pool, with the pool's
    /// hashtag under per-hashtag pooling.
    pub dropped: Vec<(Option<String>, usize)>,
}

/// Larger-is-better orientation of metric `k` (1-based).
pub fn orient(k: usize, value: f64) -> f64 {
    if k == 9 {
        value
    } else {
        -value
    }
}

pub fn compose_cmi(records: &[MetricRecord], pooling: Pooling) -> Result<CmiReport> {
    if records.is_empty() {
        return Err(Error::invalid("no metric rows to compose"));
    }
    let mut pools: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = match pooling {
            Pooling::Corpus => None,
            Pooling::PerHashtag => Some(r.hashtag.as_str()),
        };
        pools.entry(key).or_default().push(i);
    }

    let mut z = vec![[None; METRIC_COUNT]; records.len()];
    let mut dropped = Vec::new();
    for (key, members) in &pools {
        for k in 0..METRIC_COUNT {
            let vals: Vec<(usize, f64)> = members
                .iter()
                .filter_map(|&i| records[i].metrics.values[k].map(|v| (i, orient(k + 1, v))))
                .collect();
            if vals.is_empty() {
                dropped.push((key.map(str::to_string), k + 1));
                continue;
            }
            let n = vals.len() as f64;
            let mean = vals.iter().map(|v| v.1).sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / n).sqrt();
            let degenerate = sd <= 1e-12 * mean.abs().max(1.0);
            for &(i, v) in &vals {
                z[i][k] = Some(if degenerate { 0.0 } else { (v - mean) / sd });
            }
        }
    }
    for (key, k) in &dropped {
        log::warn!(
            "metric m{k} is invalid for every row{}; dropped from cmi",
            key.as_ref().map(|h| format!(" of `{h}`")).unwrap_or_default()
        );
    }

    let rows = records
        .iter()
        .zip(z)
        .map(|(r, z)| CmiRow {
            hashtag: r.hashtag.clone(),
            model: r.model.clone(),
            run: r.run,
            cmi: mean_valid(&z, (1, METRIC_COUNT)),
            popularity: mean_valid(&z, POPULARITY),
            growth: mean_valid(&z, GROWTH),
            adopters: mean_valid(&z, ADOPTERS),
            z,
        })
        .collect();
    Ok(CmiReport { rows, dropped })
}

fn mean_valid(z: &[Option<f64>; METRIC_COUNT], (lo, hi): (usize, usize)) -> Option<f64> {
    let vals: Vec<f64> = z[lo - 1..hi].iter().flatten().copied().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

impl CmiReport {
    /// Mean cmi per model over rows with a defined cmi.
    pub fn mean_by_model(&self) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            if let Some(c) = r.cmi {
                let e = acc.entry(r.model.clone()).or_default();
                e.0 += c;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect()
    }

    /// Mean cmi per (hashtag, model), averaging over runs.
    pub fn mean_by_hashtag_model(&self) -> BTreeMap<(String, String), f64> {
        let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            if let Some(c) = r.cmi {
                let e = acc.entry((r.hashtag.clone(), r.model.clone())).or_default();
                e.0 += c;
                e.1 += 1;
            }
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["hashtag".to_string(), "model".into(), "run".into()];
        header.extend((1..=METRIC_COUNT).map(|k| format!("z{k}")));
        header.extend(["cmi", "pop", "growth", "adopters"].map(String::from));
        w.write_record(&header)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let mut row = vec![r.hashtag.clone(), r.model.clone(), r.run.to_string()];
            row.extend(r.z.iter().map(|&v| cell(v)));
            row.extend([cell(r.cmi), cell(r.popularity), cell(r.growth), cell(r.adopters)]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
