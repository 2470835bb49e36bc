use nalgebra::{DMatrix, DVector};

use super::primitives::histogram_kl;
use crate::{Error, Result};

pub const KL_BINS: usize = 20;
pub const KL_SMOOTHING: f64 = 1e-6;
/// L2 penalty on the non-intercept coefficients (sum-of-losses scale).
pub const LOGISTIC_PENALTY: f64 = 1.0;

/// Propensity scores of both sides under a logistic model of
/// "row came from the simulated side" on standardized features.
pub fn propensity_scores(emp: &[Vec<f64>], sim: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if emp.len() < 2 || sim.len() < 2 {
        return Err(Error::invalid("propensity model needs at least two rows per side"));
    }
    let d = emp[0].len();
    if emp.iter().chain(sim).any(|r| r.len() != d) {
        return Err(Error::invalid("propensity feature rows differ in length"));
    }
    let rows: Vec<&Vec<f64>> = emp.iter().chain(sim).collect();
    let n = rows.len();
    let mut x = DMatrix::<f64>::zeros(n, d + 1);
    for (i, r) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for j in 0..d {
            x[(i, j + 1)] = r[j];
        }
    }
    standardize_columns(&mut x);
    let y = DVector::from_iterator(n, (0..n).map(|i| if i < emp.len() { 0.0 } else { 1.0 }));
    let beta = fit_logistic(&x, &y, LOGISTIC_PENALTY)?;
    let scores: Vec<f64> = (&x * &beta).iter().map(|&z| sigmoid(z)).collect();
    let (e, s) = scores.split_at(emp.len());
    Ok((e.to_vec(), s.to_vec()))
}

/// KL(empirical || simulated) of the binned propensity scores.
pub fn propensity_kl(emp: &[Vec<f64>], sim: &[Vec<f64>], bins: usize) -> Result<f64> {
    let (e, s) = propensity_scores(emp, sim)?;
    histogram_kl(&e, &s, bins, KL_SMOOTHING)
}

fn standardize_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows() as f64;
    for j in 1..x.ncols() {
        let mut col = x.column_mut(j);
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        for v in col.iter_mut() {
            *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Newton-Raphson on the penalized log-likelihood; column 0 is the
/// unpenalized intercept.
fn fit_logistic(x: &DMatrix<f64>, y: &DVector<f64>, penalty: f64) -> Result<DVector<f64>> {
    let p = x.ncols();
    let mut beta = DVector::<f64>::zeros(p);
    let mut ridge = DMatrix::<f64>::identity(p, p) * penalty;
    ridge[(0, 0)] = 0.0;
    for _ in 0..100 {
        let mu = (x * &beta).map(sigmoid);
        let grad = x.transpose() * (y - &mu) - &ridge * &beta;
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-12));
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let hess = x.transpose() * xw + &ridge;
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Failed("logistic Hessian is not positive definite".into()))?
            .solve(&grad);
        beta += &step;
        if step.amax() < 1e-10 {
            return Ok(beta);
        }
    }
    Err(Error::NoConvergence {
        what: "logistic regression",
        iterations: 100,
    })
}
