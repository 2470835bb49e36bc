use std::collections::BTreeSet;
use std::io::Write;

use crate::graph::NodePositionFeatures;
use crate::identity::{seed_similarity, HashtagSpec};
use crate::worldio::{Hashtag, World};
use crate::{Error, Result};

/// Hashtag-level covariates, all computable from the first uses.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRow {
    pub hashtag: String,
    pub topic: Option<String>,
    pub semantic_sparsity: Option<u32>,
    pub semantic_growth: Option<f64>,
    /// `(category, mean pairwise seed similarity)` in schema order.
    pub seed_similarity: Vec<(String, f64)>,
    /// Mean pairwise region-graph hop distance between seeds.
    pub seed_proximity: f64,
    pub median_seed_eigencentrality: f64,
}

pub fn covariate_row(world: &World, positions: &[NodePositionFeatures], hashtag: &Hashtag) -> Result<CovariateRow> {
    let spec = &hashtag.spec;
    let seeds = distinct_seeds(spec);
    let seed_similarity = world
        .ids
        .schema()
        .categories()
        .iter()
        .map(|c| {
            let v = if seeds.len() < 2 { 1.0 } else { seed_similarity(&world.ids, &seeds, &c.name)? };
            Ok((c.name.clone(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CovariateRow {
        hashtag: spec.tag.clone(),
        topic: hashtag.topic.clone(),
        semantic_sparsity: hashtag.semantic_sparsity,
        semantic_growth: hashtag.semantic_growth,
        seed_similarity,
        seed_proximity: seed_proximity(world, &seeds),
        median_seed_eigencentrality: median(seeds.iter().map(|&s| positions[s].eigencentrality).collect()),
    })
}

fn distinct_seeds(spec: &HashtagSpec) -> Vec<usize> {
    let mut s = spec.seeds.clone();
    s.sort_unstable();
    s.dedup();
    s
}

/// Unreachable pairs are skipped; a single region or seed gives 0.
fn seed_proximity(world: &World, seeds: &[usize]) -> f64 {
    let regions: Vec<usize> = seeds.iter().map(|&s| world.regions.region_of(s)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    let mut cache = std::collections::HashMap::new();
    for a in 0..regions.len() {
        let hops = cache
            .entry(regions[a])
            .or_insert_with(|| world.regions.hops_from(regions[a]))
            .clone();
        for &rb in &regions[a + 1..] {
            if let Some(h) = hops[rb] {
                total += f64::from(h);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Numeric covariate matrix, one row per hashtag. The topic is one-hot
/// encoded with the alphabetically first level held out as reference;
/// semantic columns appear only when every row has them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    pub hashtags: Vec<String>,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CovariateTable {
    pub fn from_rows(rows: &[CovariateRow]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("no covariate rows"))?;
        let categories: Vec<&str> = first.seed_similarity.iter().map(|(c, _)| c.as_str()).collect();
        if rows
            .iter()
            .any(|r| r.seed_similarity.iter().map(|(c, _)| c.as_str()).ne(categories.iter().copied()))
        {
            return Err(Error::invalid("covariate rows disagree on identity categories"));
        }
        let with_sparsity = rows.iter().all(|r| r.semantic_sparsity.is_some());
        let with_growth = rows.iter().all(|r| r.semantic_growth.is_some());
        let levels: BTreeSet<&str> = rows.iter().filter_map(|r| r.topic.as_deref()).collect();
        let with_topic = rows.iter().all(|r| r.topic.is_some()) && levels.len() > 1;
        let levels: Vec<&str> = levels.into_iter().skip(1).collect();

        let mut names = Vec::new();
        if with_sparsity {
            names.push("semantic_sparsity".to_string());
        }
        if with_growth {
            names.push("semantic_growth".to_string());
        }
        names.extend(categories.iter().map(|c| format!("seed_similarity_{c}")));
        names.push("seed_proximity".into());
        names.push("median_seed_eigencentrality".into());
        if with_topic {
            names.extend(levels.iter().map(|l| format!("topic_{l}")));
        }

        let data = rows
            .iter()
            .map(|r| {
                let mut v = Vec::with_capacity(names.len());
                if with_sparsity {
                    v.push(f64::from(r.semantic_sparsity.unwrap()));
                }
                if with_growth {
                    v.push(r.semantic_growth.unwrap());
                }
                v.extend(r.seed_similarity.iter().map(|(_, s)| *s));
                v.push(r.seed_proximity);
                v.push(r.median_seed_eigencentrality);
                if with_topic {
                    let t = r.topic.as_deref().unwrap();
                    v.extend(levels.iter().map(|l| f64::from(u8::from(*l == t))));
                }
                v
            })
            .collect::<Vec<_>>();
        if data.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite covariate value"));
        }
        Ok(CovariateTable {
            hashtags: rows.iter().map(|r| r.hashtag.clone()).collect(),
            names,
            rows: data,
        })
    }

    pub fn row_of(&self, hashtag: &str) -> Option<&[f64]> {
        self.hashtags.iter().position(|h| h == hashtag).map(|i| self.rows[i].as_slice())
    }

    /// Z-scored copy with population standard deviations; constant
    /// columns become all zero.
    pub fn standardized(&self) -> CovariateTable {
        let n = self.rows.len() as f64;
        let mut out = self.clone();
        for j in 0..self.names.len() {
            let mean = self.rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let sd = (self.rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            let degenerate = sd <= 1e-12 * mean.abs().max(1.0);
            for r in &mut out.rows {
                r[j] = if degenerate { 0.0 } else { (r[j] - mean) / sd };
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["hashtag".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (h, r) in self.hashtags.iter().zip(&self.rows) {
            let mut rec = vec![h.clone()];
            rec.extend(r.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tag: &str, topic: Option<&str>, sim: f64) -> CovariateRow {
        CovariateRow {
            hashtag: tag.into(),
            topic: topic.map(String::from),
            semantic_sparsity: Some(3),
            semantic_growth: None,
            seed_similarity: vec![("a".into(), sim), ("b".into(), 0.5)],
            seed_proximity: 1.0,
            median_seed_eigencentrality: 0.1,
        }
    }

    #[test]
    fn one_hot_topic_with_reference_level() {
        let rows = [row("x", Some("sports"), 0.1), row("y", Some("art"), 0.2), row("z", Some("news"), 0.3)];
        let t = CovariateTable::from_rows(&rows).unwrap();
        assert_eq!(
            t.names,
            [
                "semantic_sparsity",
                "seed_similarity_a",
                "seed_similarity_b",
                "seed_proximity",
                "median_seed_eigencentrality",
                "topic_news",
                "topic_sports"
            ]
        );
        assert_eq!(t.rows[0][5..], [0.0, 1.0]);
        assert_eq!(t.rows[1][5..], [0.0, 0.0]);
        let z = t.standardized();
        assert!(z.rows.iter().all(|r| r[0] == 0.0));
        let col: Vec<f64> = z.rows.iter().map(|r| r[1]).collect();
        assert!(col.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn median_and_proximity_helpers() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        let rows = [row("x", None, 0.1), row("y", Some("a"), 0.2)];
        let t = CovariateTable::from_rows(&rows).unwrap();
        assert!(!t.names.iter().any(|n| n.starts_with("topic")));
    }
}
