use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::covariates::CovariateTable;
use crate::cmi::CmiReport;
use crate::seeds::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means the square root of the
    /// feature count.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(c) => return c,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Bagged Gini decision trees with per-split feature subsampling.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
    classes: usize,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: usize, params: &ForestParams, rng_seed: u64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::invalid("forest needs matching, nonempty features and labels"));
        }
        let width = x[0].len();
        if x.iter().any(|r| r.len() != width) {
            return Err(Error::invalid("feature rows differ in width"));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }
        if params.trees == 0 {
            return Err(Error::invalid("forest needs at least one tree"));
        }
        let mtry = params
            .max_features
            .unwrap_or_else(|| (width as f64).sqrt().ceil() as usize)
            .clamp(1, width.max(1));
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(derive_seed(rng_seed, &["tree", &t.to_string()]));
                let sample: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
                let mut b = Builder {
                    x,
                    y,
                    classes,
                    mtry,
                    params,
                    rng,
                    nodes: Vec::new(),
                };
                b.grow(sample, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(RandomForest { trees, classes })
    }

    /// Majority vote; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        argmax_count(&votes)
    }
}

fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    mtry: usize,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0usize; self.classes];
        for &i in &idx {
            counts[self.y[i]] += 1;
        }
        let majority = argmax_count(&counts);
        let pure = counts[majority] == idx.len();
        let at_depth = self.params.max_depth.is_some_and(|d| depth >= d);
        let leaf = self.params.min_samples_leaf.max(1);
        let split = if pure || at_depth || idx.len() < 2 * leaf {
            None
        } else {
            self.best_split(&idx, &counts)
        };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority));
        if let Some((feature, threshold)) = split {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = Node::Split { feature, threshold, left, right };
        }
        id
    }

    /// Searches a random feature subset, falling back to the remaining
    /// features when the subset cannot split.
    fn best_split(&mut self, idx: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        let width = self.x[0].len();
        let mut features: Vec<usize> = (0..width).collect();
        features.shuffle(&mut self.rng);
        let parent = gini(counts, idx.len());
        let mut best: Option<(f64, usize, f64)> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0usize; self.classes];
            let leaf = self.params.min_samples_leaf.max(1);
            for k in 0..order.len() - 1 {
                left[self.y[order[k]]] += 1;
                let (a, b) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                let nl = k + 1;
                let nr = order.len() - nl;
                if a == b || nl < leaf || nr < leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / order.len() as f64;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, a + (b - a) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    /// Mean held-out accuracy over repeats.
    pub accuracy: f64,
    pub per_repeat: Vec<f64>,
    /// Held-out prediction per row, by majority over repeats.
    pub predictions: Vec<usize>,
    pub majority_baseline: f64,
}

/// Repeated stratified k-fold cross-validation of a random forest.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    folds: usize,
    repeats: usize,
    params: &ForestParams,
    rng_seed: u64,
) -> Result<CvResult> {
    let n = x.len();
    if folds < 2 || repeats == 0 {
        return Err(Error::invalid("need at least 2 folds and 1 repeat"));
    }
    if n < folds {
        return Err(Error::invalid(format!("{n} trials is fewer than {folds} folds")));
    }
    let mut votes = vec![vec![0usize; classes]; n];
    let mut per_repeat = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut rng = rng_from_seed(derive_seed(rng_seed, &["cv", &rep.to_string()]));
        let mut fold_of = vec![0usize; n];
        let mut next = 0;
        for c in 0..classes {
            let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == c).collect();
            members.shuffle(&mut rng);
            for i in members {
                fold_of[i] = next % folds;
                next += 1;
            }
        }
        let preds: Vec<Vec<(usize, usize)>> = (0..folds)
            .into_par_iter()
            .map(|f| {
                let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
                let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
                let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
                let seed = derive_seed(rng_seed, &["cv", &rep.to_string(), &f.to_string()]);
                let forest = RandomForest::fit(&tx, &ty, classes, params, seed)?;
                Ok((0..n).filter(|&i| fold_of[i] == f).map(|i| (i, forest.predict(&x[i]))).collect())
            })
            .collect::<Result<_>>()?;
        let mut correct = 0;
        for (i, p) in preds.into_iter().flatten() {
            votes[i][p] += 1;
            correct += usize::from(p == y[i]);
        }
        per_repeat.push(correct as f64 / n as f64);
    }
    let mut freq = vec![0usize; classes];
    for &c in y {
        freq[c] += 1;
    }
    Ok(CvResult {
        accuracy: per_repeat.iter().sum::<f64>() / repeats as f64,
        per_repeat,
        predictions: votes.iter().map(|v| argmax_count(v)).collect(),
        majority_baseline: *freq.iter().max().unwrap() as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionRow {
    pub hashtag: String,
    pub optimal: String,
    pub predicted: String,
    /// Mean cmi per model, in `CombinedModels::models` order.
    pub cmi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedModels {
    pub models: Vec<String>,
    pub rows: Vec<SelectionRow>,
    pub accuracy: f64,
    pub accuracy_per_repeat: Vec<f64>,
    pub majority_baseline: f64,
    pub model_mean_cmi: BTreeMap<String, f64>,
    pub optimal_mean_cmi: f64,
    pub predicted_mean_cmi: f64,
    /// Hashtags skipped for lacking a model's cmi or covariates.
    pub skipped: Vec<String>,
}

/// Per-hashtag best model (post hoc) and a cross-validated forest's pick
/// from the covariates. Hashtags missing any model are skipped.
pub fn combined_models(
    report: &CmiReport,
    covariates: &CovariateTable,
    folds: usize,
    repeats: usize,
    params: &ForestParams,
    rng_seed: u64,
) -> Result<CombinedModels> {
    let means = report.mean_by_hashtag_model();
    let models: Vec<String> = {
        let mut m: Vec<String> = means.keys().map(|(_, m)| m.clone()).collect();
        m.sort();
        m.dedup();
        m
    };
    let mut hashtags: Vec<String> = means.keys().map(|(h, _)| h.clone()).collect();
    hashtags.dedup();
    let mut table = Vec::new();
    let mut skipped = Vec::new();
    for h in hashtags {
        let cmi: Option<Vec<f64>> = models.iter().map(|m| means.get(&(h.clone(), m.clone())).copied()).collect();
        match (cmi, covariates.row_of(&h)) {
            (Some(c), Some(x)) => table.push((h, c, x.to_vec())),
            _ => skipped.push(h),
        }
    }
    if models.is_empty() || table.is_empty() {
        return Err(Error::invalid("no hashtag has a cmi for every model"));
    }
    let labels: Vec<usize> = table.iter().map(|(_, c, _)| argmax_f64(c)).collect();
    let x: Vec<Vec<f64>> = table.iter().map(|(_, _, x)| x.clone()).collect();
    let cv = cross_validate(&x, &labels, models.len(), folds, repeats, params, rng_seed)?;

    let n = table.len() as f64;
    let mut model_mean_cmi = BTreeMap::new();
    for (j, m) in models.iter().enumerate() {
        model_mean_cmi.insert(m.clone(), table.iter().map(|(_, c, _)| c[j]).sum::<f64>() / n);
    }
    let optimal_mean_cmi = table.iter().zip(&labels).map(|((_, c, _), &l)| c[l]).sum::<f64>() / n;
    let predicted_mean_cmi = table.iter().zip(&cv.predictions).map(|((_, c, _), &p)| c[p]).sum::<f64>() / n;
    let rows = table
        .into_iter()
        .zip(labels.iter().zip(&cv.predictions))
        .map(|((hashtag, cmi, _), (&l, &p))| SelectionRow {
            hashtag,
            optimal: models[l].clone(),
            predicted: models[p].clone(),
            cmi,
        })
        .collect();
    Ok(CombinedModels {
        models,
        rows,
        accuracy: cv.accuracy,
        accuracy_per_repeat: cv.per_repeat,
        majority_baseline: cv.majority_baseline,
        model_mean_cmi,
        optimal_mean_cmi,
        predicted_mean_cmi,
        skipped,
    })
}

/// First index of the maximum.
fn argmax_f64(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
