use std::collections::HashMap;

use crate::{Error, Result};

/// Sparsity and growth of a hashtag's semantic neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticCovariates {
    /// Tokens whose embedding cosine with the hashtag reaches the threshold.
    pub sparsity: u32,
    /// Spearman correlation of the neighbors' summed monthly frequency with
    /// the month index; 0 when there are no neighbors or the series is flat.
    pub growth: f64,
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Tokens missing from `freq_series` contribute nothing to growth.
pub fn semantic_covariates(
    embeddings: &HashMap<String, Vec<f64>>,
    freq_series: &HashMap<String, Vec<f64>>,
    tag: &str,
    threshold: f64,
) -> Result<SemanticCovariates> {
    let target = embeddings
        .get(tag)
        .ok_or_else(|| Error::invalid(format!("`{tag}` is missing from the embedding table")))?;
    let mut neighbors: Vec<&str> = Vec::new();
    for (token, v) in embeddings {
        if token == tag {
            continue;
        }
        let c = cosine(target, v)
            .ok_or_else(|| Error::invalid(format!("embedding of `{token}` is zero or has the wrong length")))?;
        if c >= threshold {
            neighbors.push(token);
        }
    }
    let months = neighbors
        .iter()
        .filter_map(|t| freq_series.get(*t))
        .map(Vec::len)
        .max()
        .unwrap_or(0);
    let mut total = vec![0.0; months];
    for series in neighbors.iter().filter_map(|t| freq_series.get(*t)) {
        for (m, f) in series.iter().enumerate() {
            total[m] += f;
        }
    }
    let index: Vec<f64> = (0..months).map(|m| m as f64).collect();
    Ok(SemanticCovariates {
        sparsity: neighbors.len() as u32,
        growth: spearman(&index, &total).unwrap_or(0.0),
    })
}
