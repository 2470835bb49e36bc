use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::covariates::CovariateTable;
use crate::engine::Variant;
use crate::{Error, Result};

/// One cmi value with its hashtag and model.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionObservation {
    pub hashtag: String,
    pub model: Variant,
    pub cmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    /// `None` without residual degrees of freedom.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    /// Columns removed as linear combinations of earlier ones.
    pub dropped: Vec<String>,
    pub observations: usize,
    pub residual_sd: f64,
    pub r_squared: f64,
}

impl RegressionResult {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "estimate", "std_error"])?;
        for c in &self.coefficients {
            w.write_record([
                c.name.as_str(),
                &c.estimate.to_string(),
                &c.std_error.map_or(String::new(), |s| s.to_string()),
            ])?;
        }
        for d in &self.dropped {
            w.write_record([d.as_str(), "", "dropped"])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least squares of cmi on an intercept, each standardized covariate, and
/// each covariate times the network-only and identity-only indicators.
/// Network+identity is the reference model. Columns that are (numerically)
/// linear combinations of earlier columns are dropped and listed.
pub fn fit_interaction_regression(table: &CovariateTable, obs: &[RegressionObservation]) -> Result<RegressionResult> {
    let models: BTreeSet<&str> = obs.iter().map(|o| o.model.name()).collect();
    if models.len() < 3 {
        return Err(Error::invalid(format!(
            "interaction regression needs all three models, found {}",
            models.len()
        )));
    }
    let z = table.standardized();
    let k = z.names.len();
    let mut names = vec!["intercept".to_string()];
    names.extend(z.names.iter().cloned());
    names.extend(z.names.iter().map(|c| format!("{c}:{}", Variant::NetworkOnly)));
    names.extend(z.names.iter().map(|c| format!("{c}:{}", Variant::IdentityOnly)));

    let mut columns = vec![Vec::with_capacity(obs.len()); 1 + 3 * k];
    let mut y = Vec::with_capacity(obs.len());
    for o in obs {
        let row = z
            .row_of(&o.hashtag)
            .ok_or_else(|| Error::invalid(format!("no covariates for hashtag `{}`", o.hashtag)))?;
        if !o.cmi.is_finite() {
            return Err(Error::invalid(format!("non-finite cmi for `{}`", o.hashtag)));
        }
        let net = f64::from(u8::from(o.model == Variant::NetworkOnly));
        let id = f64::from(u8::from(o.model == Variant::IdentityOnly));
        columns[0].push(1.0);
        for (j, &c) in row.iter().enumerate() {
            columns[1 + j].push(c);
            columns[1 + k + j].push(c * net);
            columns[1 + 2 * k + j].push(c * id);
        }
        y.push(o.cmi);
    }

    let (kept, dropped) = independent_columns(&columns);
    let n = obs.len();
    let p = kept.len();
    let x = DMatrix::from_fn(n, p, |i, j| columns[kept[j]][i]);
    let y = DVector::from_vec(y);
    let xtx = x.transpose() * &x;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Failed("normal equations are not positive definite".into()))?;
    let beta = chol.solve(&(x.transpose() * &y));
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let dof = n.saturating_sub(p);
    let sigma2 = (dof > 0).then(|| rss / dof as f64);
    let inv = chol.inverse();
    let coefficients = kept
        .iter()
        .enumerate()
        .map(|(j, &c)| Coefficient {
            name: names[c].clone(),
            estimate: beta[j],
            std_error: sigma2.map(|s2| (s2 * inv[(j, j)]).sqrt()),
        })
        .collect();
    if !dropped.is_empty() {
        log::warn!("rank-deficient design; dropped {}", dropped.iter().map(|&c| names[c].as_str()).collect::<Vec<_>>().join(", "));
    }
    Ok(RegressionResult {
        coefficients,
        dropped: dropped.into_iter().map(|c| names[c].clone()).collect(),
        observations: n,
        residual_sd: sigma2.unwrap_or(0.0).sqrt(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 0.0 },
    })
}

/// Greedy modified Gram-Schmidt: keeps a column when its residual after
/// projecting out the kept columns retains more than 1e-9 of its norm.
fn independent_columns(columns: &[Vec<f64>]) -> (Vec<usize>, Vec<usize>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (j, col) in columns.iter().enumerate() {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r = col.clone();
        for q in &basis {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && rn > 1e-9 * norm {
            r.iter_mut().for_each(|a| *a /= rn);
            basis.push(r);
            kept.push(j);
        } else {
            dropped.push(j);
        }
    }
    (kept, dropped)
}
