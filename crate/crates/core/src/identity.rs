//! Agent identity vectors and the similarity terms built on them.
//!
//! An identity vector holds one value in `[0, 1]` per register, grouped into
//! categories (a race category with several registers, a political category,
//! and so on). A hashtag signals the registers on which its seed adopters are
//! extreme; agent-to-hashtag and agent-to-neighbor similarities are computed
//! in log space over those registers only.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::graph::Network;
use crate::{Error, Result};

/// Lower bound on `1 - |a - b|` before taking logs.
pub const SIMILARITY_EPS: f64 = 1e-6;

/// Default quantile a seed median must reach for a register to count.
pub const DEFAULT_PERCENTILE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub registers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySchema {
    categories: Vec<Category>,
}

impl CategorySchema {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut total = 0;
        for c in &categories {
            if c.registers.is_empty() {
                return Err(Error::invalid(format!("category `{}` has no registers", c.name)));
            }
            for r in &c.registers {
                if !seen.insert(r.as_str()) {
                    return Err(Error::invalid(format!("duplicate register `{r}`")));
                }
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::invalid("identity schema needs at least one register"));
        }
        Ok(CategorySchema { categories })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    /// Total number of registers.
    pub fn dims(&self) -> usize {
        self.categories.iter().map(|c| c.registers.len()).sum()
    }

    pub fn register_names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().flat_map(|c| c.registers.iter().map(String::as_str))
    }

    /// Column range of a category.
    pub fn category_dims(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut start = 0;
        for c in &self.categories {
            if c.name == name {
                return Some(start..start + c.registers.len());
            }
            start += c.registers.len();
        }
        None
    }

    /// Read `category,register` pairs. A leading `category,register` header
    /// is optional. Registers of one category must be contiguous.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut categories: Vec<Category> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::parse(i + 1, "expected `category,register`"));
            }
            let (cat, reg) = (rec[0].trim(), rec[1].trim());
            if i == 0 && cat == "category" && reg == "register" {
                continue;
            }
            match categories.last_mut() {
                Some(last) if last.name == cat => last.registers.push(reg.to_string()),
                _ => {
                    if categories.iter().any(|c| c.name == cat) {
                        return Err(Error::parse(
                            i + 1,
                            format!("registers of category `{cat}` are not contiguous"),
                        ));
                    }
                    categories.push(Category {
                        name: cat.to_string(),
                        registers: vec![reg.to_string()],
                    });
                }
            }
        }
        CategorySchema::new(categories)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "register"])?;
        for c in &self.categories {
            for r in &c.registers {
                w.write_record([c.name.as_str(), r.as_str()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Agents-by-registers matrix of identity values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityMatrix {
    schema: CategorySchema,
    values: Vec<f64>,
    agents: usize,
}

impl IdentityMatrix {
    pub fn new(schema: CategorySchema, values: Vec<f64>) -> Result<Self> {
        let k = schema.dims();
        if !values.len().is_multiple_of(k) {
            return Err(Error::invalid(format!(
                "{} identity values do not fill rows of width {k}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("identity value {bad} outside [0, 1]")));
        }
        Ok(IdentityMatrix {
            agents: values.len() / k,
            schema,
            values,
        })
    }

    pub fn schema(&self) -> &CategorySchema {
        &self.schema
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn dims(&self) -> usize {
        self.schema.dims()
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        let k = self.dims();
        &self.values[agent * k..(agent + 1) * k]
    }

    pub fn value(&self, agent: usize, dim: usize) -> f64 {
        self.values[agent * self.dims() + dim]
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.agents {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "agent {agent} outside identity matrix of {} rows",
                self.agents
            )))
        }
    }

    /// Ensure the matrix lines up with a network's nodes.
    pub fn check_network(&self, net: &Network) -> Result<()> {
        if self.agents != net.node_count() {
            return Err(Error::invalid(format!(
                "identity matrix has {} rows but network has {} nodes",
                self.agents,
                net.node_count()
            )));
        }
        Ok(())
    }

    /// Read the `node_id,<register...>` CSV, ordering rows by the network's
    /// node indices.
    pub fn read_csv<R: Read>(reader: R, schema: CategorySchema, net: &Network) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = schema.register_names().collect();
        let got: Vec<&str> = headers.iter().skip(1).collect();
        if headers.get(0) != Some("node_id") || got != expected {
            return Err(Error::invalid(format!(
                "identity header must be `node_id,{}`",
                expected.join(",")
            )));
        }
        let k = schema.dims();
        let mut values = vec![f64::NAN; net.node_count() * k];
        let mut filled = vec![false; net.node_count()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let node = net
                .index_of(&rec[0])
                .ok_or_else(|| Error::parse(line, format!("unknown node `{}`", &rec[0])))?;
            if std::mem::replace(&mut filled[node], true) {
                return Err(Error::parse(line, format!("duplicate row for `{}`", &rec[0])));
            }
            for d in 0..k {
                let field = rec.get(d + 1).ok_or_else(|| Error::parse(line, "short row"))?;
                values[node * k + d] = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad value `{field}`")))?;
            }
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(Error::invalid(format!("no identity row for `{}`", net.id(missing))));
        }
        IdentityMatrix::new(schema, values)
    }

    pub fn write_csv<W: Write>(&self, net: &Network, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["node_id".to_string()];
        header.extend(self.schema.register_names().map(str::to_string));
        w.write_record(&header)?;
        for a in 0..self.agents {
            let mut rec = vec![net.id(a).to_string()];
            rec.extend(self.row(a).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A hashtag with its seed adopters, signaled identity and observed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashtagSpec {
    pub tag: String,
    pub seeds: Vec<usize>,
    /// Registers the hashtag signals, ascending.
    pub relevant_dims: Vec<usize>,
    /// Hashtag identity on each relevant register, aligned with
    /// `relevant_dims`.
    pub identity: Vec<f64>,
    /// Observed number of uses in the (sampled) empirical data.
    pub empirical_size: u64,
    /// Fraction of all uses the empirical data samples.
    pub sample_rate: f64,
}

impl HashtagSpec {
    /// Build a spec whose signaled identity is inferred from its seeds.
    pub fn from_seeds(
        tag: impl Into<String>,
        ids: &IdentityMatrix,
        seeds: Vec<usize>,
        empirical_size: u64,
        sample_rate: f64,
    ) -> Result<Self> {
        let (relevant_dims, identity) = infer_hashtag_identity(ids, &seeds, DEFAULT_PERCENTILE)?;
        let spec = HashtagSpec {
            tag: tag.into(),
            seeds,
            relevant_dims,
            identity,
            empirical_size,
            sample_rate,
        };
        spec.validate(ids)?;
        Ok(spec)
    }

    pub fn validate(&self, ids: &IdentityMatrix) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid(format!("hashtag `{}` has no seeds", self.tag)));
        }
        for &s in &self.seeds {
            ids.check_agent(s)?;
        }
        if self.relevant_dims.len() != self.identity.len() {
            return Err(Error::invalid("relevant_dims and identity differ in length"));
        }
        if self.relevant_dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("relevant_dims must be strictly ascending"));
        }
        if self.relevant_dims.iter().any(|&d| d >= ids.dims()) {
            return Err(Error::invalid("relevant dimension outside schema"));
        }
        if self.identity.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("hashtag identity outside [0, 1]"));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "sample rate {} outside (0, 1]",
                self.sample_rate
            )));
        }
        Ok(())
    }
}

/// Median with the midpoint convention for even counts.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Registers the seeds signal, and the hashtag's value on each.
///
/// A register is relevant when the median seed value reaches the
/// `percentile` quantile of that register over all agents; the hashtag's
/// value there is the seed median. An empty result is allowed and marks an
/// identity-neutral hashtag.
pub fn infer_hashtag_identity(
    ids: &IdentityMatrix,
    seeds: &[usize],
    percentile: f64,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if seeds.is_empty() {
        return Err(Error::invalid("cannot infer hashtag identity without seeds"));
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::invalid(format!("percentile {percentile} outside (0, 1)")));
    }
    for &s in seeds {
        ids.check_agent(s)?;
    }
    let mut dims = Vec::new();
    let mut values = Vec::new();
    let mut column = Vec::with_capacity(ids.agents());
    let mut seed_vals = Vec::with_capacity(seeds.len());
    for d in 0..ids.dims() {
        column.clear();
        column.extend((0..ids.agents()).map(|a| ids.value(a, d)));
        column.sort_by(f64::total_cmp);
        seed_vals.clear();
        seed_vals.extend(seeds.iter().map(|&s| ids.value(s, d)));
        let m = median(&mut seed_vals);
        if m >= quantile(&column, percentile) {
            dims.push(d);
            values.push(m);
        }
    }
    Ok((dims, values))
}

/// How log-similarities are turned into the bounded similarity terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// `exp(s - max s)`: the best match gets exactly 1, others less.
    #[default]
    Normalized,
    /// Ratio of the log-similarity sum to the sum of per-register maxima.
    /// Kept for comparison only: values can exceed 1, and `0/0` (an exact
    /// match on every register) is taken as 1.
    Literal,
}

fn log_sim(a: f64, b: f64) -> f64 {
    (1.0 - (a - b).abs()).max(SIMILARITY_EPS).ln()
}

/// Summed log-similarity over the given dimensions.
fn log_similarity(row_a: &[f64], row_b: &[f64], dims: &[usize]) -> f64 {
    dims.iter().map(|&d| log_sim(row_a[d], row_b[d])).sum()
}

/// Agent-to-hashtag similarity for every agent.
///
/// In normalized mode the most similar agent in the population gets exactly
/// 1. Returns all ones when the hashtag signals no register.
pub fn hashtag_similarities(ids: &IdentityMatrix, spec: &HashtagSpec, mode: DeltaMode) -> Vec<f64> {
    let dims = &spec.relevant_dims;
    if dims.is_empty() {
        return vec![1.0; ids.agents()];
    }
    let hashtag_sim = |a: usize| -> f64 {
        dims.iter()
            .zip(&spec.identity)
            .map(|(&d, &h)| log_sim(h, ids.value(a, d)))
            .sum()
    };
    let sims: Vec<f64> = (0..ids.agents()).map(hashtag_sim).collect();
    match mode {
        DeltaMode::Normalized => {
            let best = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            sims.iter().map(|s| (s - best).exp()).collect()
        }
        DeltaMode::Literal => {
            let denom: f64 = dims
                .iter()
                .zip(&spec.identity)
                .map(|(&d, &h)| {
                    (0..ids.agents())
                        .map(|a| log_sim(h, ids.value(a, d)))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum();
            sims.iter().map(|&s| literal_ratio(s, denom)).collect()
        }
    }
}

fn literal_ratio(num: f64, denom: f64) -> f64 {
    if denom == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / denom
    }
}

/// `delta_ih` for a single agent.
pub fn delta_agent_hashtag(ids: &IdentityMatrix, agent: usize, spec: &HashtagSpec) -> Result<f64> {
    ids.check_agent(agent)?;
    Ok(hashtag_similarities(ids, spec, DeltaMode::Normalized)[agent])
}

/// Neighbor similarity for every edge, indexed by edge id.
///
/// The value at edge `j -> i` is the similarity of `j` as seen by `i`,
/// normalized over `i`'s in-neighbors so that the most similar one gets
/// exactly 1. Returns all ones when `dims` is empty.
pub fn edge_similarities(
    net: &Network,
    ids: &IdentityMatrix,
    dims: &[usize],
    mode: DeltaMode,
) -> Vec<f64> {
    let mut out = vec![1.0; net.edge_count()];
    if dims.is_empty() {
        return out;
    }
    let mut scratch: Vec<(usize, f64)> = Vec::new();
    for i in 0..net.node_count() {
        let row_i = ids.row(i);
        scratch.clear();
        scratch.extend(net.in_edges(i).map(|(j, _, e)| (e, log_similarity(row_i, ids.row(j), dims))));
        if scratch.is_empty() {
            continue;
        }
        match mode {
            DeltaMode::Normalized => {
                let best = scratch.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                for &(e, s) in &scratch {
                    out[e] = (s - best).exp();
                }
            }
            DeltaMode::Literal => {
                let denom: f64 = dims
                    .iter()
                    .map(|&d| {
                        net.in_edges(i)
                            .map(|(p, _, _)| log_sim(row_i[d], ids.value(p, d)))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .sum();
                for &(e, s) in &scratch {
                    out[e] = literal_ratio(s, denom);
                }
            }
        }
    }
    out
}

/// Similarity of in-neighbor `j` as seen by `i`.
pub fn delta_edge(
    net: &Network,
    ids: &IdentityMatrix,
    i: usize,
    j: usize,
    dims: &[usize],
) -> Result<f64> {
    net.check_node(i)?;
    net.check_node(j)?;
    if net.edge_id(j, i).is_none() {
        return Err(Error::invalid(format!(
            "`{}` is not a neighbor of `{}`",
            net.id(j),
            net.id(i)
        )));
    }
    if dims.is_empty() {
        return Ok(1.0);
    }
    let row_i = ids.row(i);
    let best = net
        .in_edges(i)
        .map(|(p, _, _)| log_similarity(row_i, ids.row(p), dims))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((log_similarity(row_i, ids.row(j), dims) - best).exp())
}

/// Mean pairwise similarity of the seeds on one category: `1 - mean |diff|`
/// over the category's registers, averaged over unordered seed pairs.
pub fn seed_similarity(ids: &IdentityMatrix, seeds: &[usize], category: &str) -> Result<f64> {
    if seeds.len() < 2 {
        return Err(Error::invalid("seed similarity needs at least two seeds"));
    }
    let range = ids
        .schema()
        .category_dims(category)
        .ok_or_else(|| Error::invalid(format!("unknown identity category `{category}`")))?;
    for &s in seeds {
        ids.check_agent(s)?;
    }
    let width = range.len() as f64;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for a in 0..seeds.len() {
        for b in (a + 1)..seeds.len() {
            let diff: f64 = range
                .clone()
                .map(|d| (ids.value(seeds[a], d) - ids.value(seeds[b], d)).abs())
                .sum();
            total += 1.0 - diff / width;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::test_graphs::{names, undirected};
    use proptest::prelude::*;

    pub fn schema(k: usize) -> CategorySchema {
        CategorySchema::new(vec![Category {
            name: "c".into(),
            registers: (0..k).map(|i| format!("r{i}")).collect(),
        }])
        .unwrap()
    }

    pub fn matrix(rows: &[&[f64]]) -> IdentityMatrix {
        let k = rows[0].len();
        IdentityMatrix::new(schema(k), rows.iter().flat_map(|r| r.iter().copied()).collect())
            .unwrap()
    }

    fn spec(dims: Vec<usize>, identity: Vec<f64>) -> HashtagSpec {
        HashtagSpec {
            tag: "t".into(),
            seeds: vec![0],
            relevant_dims: dims,
            identity,
            empirical_size: 1,
            sample_rate: 1.0,
        }
    }

    #[test]
    fn schema_validation() {
        assert!(CategorySchema::new(vec![]).is_err());
        let dup = CategorySchema::new(vec![
            Category { name: "a".into(), registers: vec!["x".into()] },
            Category { name: "b".into(), registers: vec!["x".into()] },
        ]);
        assert!(dup.is_err());
        let s = CategorySchema::read_csv("category,register\nrace,a\nrace,b\npol,d\n".as_bytes())
            .unwrap();
        assert_eq!(s.dims(), 3);
        assert_eq!(s.category_dims("pol"), Some(2..3));
        assert!(CategorySchema::read_csv("race,a\npol,d\nrace,b\n".as_bytes()).is_err());
    }

    #[test]
    fn extreme_seeds_mark_a_relevant_register() {
        // four seeds at 0.9 reach the top quartile of dim 0
        let mut rows: Vec<Vec<f64>> = (0..8).map(|i| vec![0.2 + 0.4 * i as f64 / 7.0, 0.5]).collect();
        rows.extend((0..4).map(|_| vec![0.9, 0.5]));
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let ids = matrix(&refs);
        let (dims, vals) = infer_hashtag_identity(&ids, &[8, 9, 10, 11], 0.75).unwrap();
        assert_eq!(dims, vec![0, 1]);
        assert_eq!(vals, vec![0.9, 0.5]);
        // a middling seed median stays out
        let (dims, _) = infer_hashtag_identity(&ids, &[0, 1, 2], 0.75).unwrap();
        assert!(!dims.contains(&0));
    }

    #[test]
    fn seed_median_below_quantile_is_excluded() {
        // column: 0.0, 0.2, 0.4, 0.6, 0.8 -> 75th percentile 0.6; seed median 0.5
        let ids = matrix(&[&[0.0], &[0.2], &[0.4], &[0.6], &[0.8]]);
        let (d, _) = infer_hashtag_identity(&ids, &[2, 3], 0.75).unwrap();
        assert!(d.is_empty());
        assert!(infer_hashtag_identity(&ids, &[], 0.75).is_err());
        assert!(infer_hashtag_identity(&ids, &[0], 1.0).is_err());
    }

    #[test]
    fn empty_relevant_set_gives_unit_similarity() {
        let ids = matrix(&[&[0.1], &[0.9]]);
        assert_eq!(hashtag_similarities(&ids, &spec(vec![], vec![]), DeltaMode::Normalized), vec![1.0, 1.0]);
    }

    #[test]
    fn two_agent_hand_evaluation() {
        let ids = matrix(&[&[0.8], &[0.3]]);
        let s = spec(vec![0], vec![0.8]);
        assert_eq!(delta_agent_hashtag(&ids, 0, &s).unwrap(), 1.0);
        let d2 = delta_agent_hashtag(&ids, 1, &s).unwrap();
        assert!((d2 - 0.5).abs() < 1e-12, "{d2}");
    }

    #[test]
    fn neighbor_similarity_hand_evaluation() {
        // i = 0 with neighbors 1 (distance 0.1) and 2 (distance 0.4)
        let net = undirected(3, &[(0, 1), (0, 2)]);
        let ids = matrix(&[&[0.5], &[0.6], &[0.9]]);
        assert!((delta_edge(&net, &ids, 0, 1, &[0]).unwrap() - 1.0).abs() < 1e-15);
        let d = delta_edge(&net, &ids, 0, 2, &[0]).unwrap();
        assert!((d - 0.6 / 0.9).abs() < 1e-12, "{d}");
        // single neighbor is its own maximizer
        assert_eq!(delta_edge(&net, &ids, 1, 0, &[0]).unwrap(), 1.0);
        assert!(delta_edge(&net, &ids, 1, 2, &[0]).is_err());

        let all = edge_similarities(&net, &ids, &[0], DeltaMode::Normalized);
        let e = net.edge_id(2, 0).unwrap();
        assert!((all[e] - d).abs() < 1e-15);
    }

    #[test]
    fn literal_mode_degenerates_at_exact_match() {
        let ids = matrix(&[&[0.8], &[0.3]]);
        let s = spec(vec![0], vec![0.8]);
        let lit = hashtag_similarities(&ids, &s, DeltaMode::Literal);
        assert_eq!(lit[0], 1.0);
        assert!(lit[1].is_infinite());
    }

    #[test]
    fn seed_similarity_cases() {
        let ids = matrix(&[&[0.0], &[0.5], &[1.0], &[0.0]]);
        assert_eq!(seed_similarity(&ids, &[0, 3], "c").unwrap(), 1.0);
        assert_eq!(seed_similarity(&ids, &[0, 2], "c").unwrap(), 0.0);
        let s = seed_similarity(&ids, &[0, 1, 2], "c").unwrap();
        assert!((s - (1.0 - (0.5 + 1.0 + 0.5) / 3.0)).abs() < 1e-15);
        assert!(seed_similarity(&ids, &[0], "c").is_err());
        assert!(seed_similarity(&ids, &[0, 1], "nope").is_err());
    }

    #[test]
    fn identity_csv_round_trip() {
        let net = undirected(2, &[(0, 1)]);
        let ids = IdentityMatrix::new(schema(2), vec![0.25, 1.0, 0.0, 0.125]).unwrap();
        let mut buf = Vec::new();
        ids.write_csv(&net, &mut buf).unwrap();
        let back = IdentityMatrix::read_csv(buf.as_slice(), schema(2), &net).unwrap();
        assert_eq!(back, ids);
        let bad = "node_id,r0\nn0,0.1\nn1,0.2\n";
        assert!(IdentityMatrix::read_csv(bad.as_bytes(), schema(2), &net).is_err());
        assert!(IdentityMatrix::new(schema(1), vec![1.5]).is_err());
        let _ = names(1);
    }

    proptest! {
        #[test]
        fn similarities_are_bounded_and_permutation_invariant(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 2..12),
            h in prop::collection::vec(0.0f64..=1.0, 3),
        ) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let ids = matrix(&refs);
            let a = hashtag_similarities(&ids, &spec(vec![0, 1, 2], h.clone()), DeltaMode::Normalized);
            prop_assert!(a.iter().all(|&x| x > 0.0 && x <= 1.0));
            prop_assert!(a.contains(&1.0));
            // permuting registers together with the hashtag identity
            let perm = [2usize, 0, 1];
            let prow: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
            let prefs: Vec<&[f64]> = prow.iter().map(|r| r.as_slice()).collect();
            let pids = matrix(&prefs);
            let ph: Vec<f64> = perm.iter().map(|&p| h[p]).collect();
            let b = hashtag_similarities(&pids, &spec(vec![0, 1, 2], ph), DeltaMode::Normalized);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn similarity_decreases_with_distance(
            base in 0.05f64..0.45, bump in 0.01f64..0.4,
        ) {
            // fixed normalizer: agent 0 matches the hashtag exactly
            let ids_near = matrix(&[&[0.5], &[0.5 + base]]);
            let ids_far = matrix(&[&[0.5], &[0.5 + (base + bump).min(0.5)]]);
            let s = spec(vec![0], vec![0.5]);
            let near = hashtag_similarities(&ids_near, &s, DeltaMode::Normalized)[1];
            let far = hashtag_similarities(&ids_far, &s, DeltaMode::Normalized)[1];
            prop_assert!(far < near);
        }

        #[test]
        fn inference_ignores_seed_order(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 6..20),
            seed_pick in prop::collection::vec(0usize..6, 1..6),
        ) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let ids = matrix(&refs);
            let mut rev = seed_pick.clone();
            rev.reverse();
            prop_assert_eq!(
                infer_hashtag_identity(&ids, &seed_pick, 0.75).unwrap(),
                infer_hashtag_identity(&ids, &rev, 0.75).unwrap()
            );
        }
    }
}
