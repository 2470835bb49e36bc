use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::Cascade;
use crate::graph::Network;
use crate::identity::IdentityMatrix;
use crate::seeds::rng_from_seed;
use crate::{Error, Result};

/// Adopters whose early behavior feeds the size features.
pub const FIRST_ADOPTERS: usize = 100;

/// Features of the first [`FIRST_ADOPTERS`] distinct adopters: first-use
/// step, network degree and degree inside that adopter set (each padded
/// with zeros to width 100), then per-dimension mean and standard deviation
/// of their identities.
pub fn size_features(cascade: &Cascade, net: &Network, ids: &IdentityMatrix) -> Vec<f64> {
    let k = FIRST_ADOPTERS;
    let mut first: Vec<(usize, u32)> = Vec::with_capacity(k);
    let mut seen = std::collections::HashSet::new();
    for e in &cascade.events {
        if first.len() == k {
            break;
        }
        if seen.insert(e.agent) {
            first.push((e.agent, e.t));
        }
    }
    let mut out = vec![0.0; 3 * k + 2 * ids.dims()];
    for (i, &(v, t)) in first.iter().enumerate() {
        out[i] = t as f64;
        out[k + i] = net.neighbors(v).len() as f64;
        out[2 * k + i] = net
            .neighbors(v)
            .iter()
            .filter(|&&u| seen.contains(&(u as usize)))
            .count() as f64;
    }
    if !first.is_empty() {
        let n = first.len() as f64;
        for d in 0..ids.dims() {
            let vals: Vec<f64> = first.iter().map(|&(v, _)| ids.value(v, d)).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            out[3 * k + d] = mean;
            out[3 * k + ids.dims() + d] = sd;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SizeModelKind {
    /// One hidden layer of rectified units trained with Adam on squared error.
    Mlp {
        hidden: usize,
        epochs: usize,
        learning_rate: f64,
        batch: usize,
        weight_decay: f64,
    },
    Ridge { lambda: f64 },
}

impl Default for SizeModelKind {
    fn default() -> Self {
        SizeModelKind::Mlp {
            hidden: 100,
            epochs: 300,
            learning_rate: 1e-3,
            batch: 32,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Mlp {
        w1: DMatrix<f64>,
        b1: DVector<f64>,
        w2: DVector<f64>,
        b2: f64,
    },
    Ridge {
        beta: DVector<f64>,
        intercept: f64,
    },
}

/// Predicts final cascade size from [`size_features`]. Inputs and target
/// are standardized internally.
#[derive(Debug, Clone)]
pub struct SizeRegressor {
    x_mean: Vec<f64>,
    x_sd: Vec<f64>,
    y_mean: f64,
    y_sd: f64,
    model: Fitted,
}

impl SizeRegressor {
    pub fn fit(features: &[Vec<f64>], sizes: &[f64], kind: SizeModelKind, seed: u64) -> Result<Self> {
        let n = features.len();
        if n < 2 || sizes.len() != n {
            return Err(Error::invalid("size regressor needs at least two labeled cascades"));
        }
        let d = features[0].len();
        if features.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("size feature rows differ in length"));
        }
        let x_mean: Vec<f64> = (0..d).map(|j| features.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let x_sd: Vec<f64> = (0..d)
            .map(|j| {
                let v = features.iter().map(|r| (r[j] - x_mean[j]).powi(2)).sum::<f64>() / n as f64;
                if v > 0.0 { v.sqrt() } else { 1.0 }
            })
            .collect();
        let y_mean = sizes.iter().sum::<f64>() / n as f64;
        let y_sd = {
            let v = sizes.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
            if v > 0.0 { v.sqrt() } else { 1.0 }
        };
        let x = DMatrix::from_fn(n, d, |i, j| (features[i][j] - x_mean[j]) / x_sd[j]);
        let y = DVector::from_iterator(n, sizes.iter().map(|s| (s - y_mean) / y_sd));
        let model = match kind {
            SizeModelKind::Ridge { lambda } => fit_ridge(&x, &y, lambda)?,
            SizeModelKind::Mlp {
                hidden,
                epochs,
                learning_rate,
                batch,
                weight_decay,
            } => fit_mlp(&x, &y, hidden, epochs, learning_rate, batch.max(1), weight_decay, seed),
        };
        Ok(SizeRegressor {
            x_mean,
            x_sd,
            y_mean,
            y_sd,
            model,
        })
    }

    pub fn feature_width(&self) -> usize {
        self.x_mean.len()
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.x_mean.len() {
            return Err(Error::invalid(format!(
                "size regressor expects {} features, got {}",
                self.x_mean.len(),
                features.len()
            )));
        }
        let x = DVector::from_iterator(
            features.len(),
            features.iter().enumerate().map(|(j, v)| (v - self.x_mean[j]) / self.x_sd[j]),
        );
        let z = match &self.model {
            Fitted::Ridge { beta, intercept } => beta.dot(&x) + intercept,
            Fitted::Mlp { w1, b1, w2, b2 } => {
                let h = (w1 * &x + b1).map(|a| a.max(0.0));
                w2.dot(&h) + b2
            }
        };
        Ok(z * self.y_sd + self.y_mean)
    }
}

fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<Fitted> {
    // centered inputs and target, so the intercept is zero
    let d = x.ncols();
    let a = x.transpose() * x + DMatrix::<f64>::identity(d, d) * lambda.max(1e-12);
    let beta = a
        .cholesky()
        .ok_or_else(|| Error::Failed("ridge system is not positive definite".into()))?
        .solve(&(x.transpose() * y));
    Ok(Fitted::Ridge { beta, intercept: 0.0 })
}

#[allow(clippy::too_many_arguments)]
fn fit_mlp(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    hidden: usize,
    epochs: usize,
    lr: f64,
    batch: usize,
    weight_decay: f64,
    seed: u64,
) -> Fitted {
    let (n, d) = x.shape();
    let mut rng = rng_from_seed(seed);
    let he1 = Normal::new(0.0, (2.0 / d.max(1) as f64).sqrt()).unwrap();
    let he2 = Normal::new(0.0, (2.0 / hidden as f64).sqrt()).unwrap();
    let mut w1 = DMatrix::from_fn(hidden, d, |_, _| he1.sample(&mut rng));
    let mut b1 = DVector::<f64>::zeros(hidden);
    let mut w2 = DVector::from_fn(hidden, |_, _| he2.sample(&mut rng));
    let mut b2 = 0.0;

    let mut adam_w1 = Adam::new(hidden * d);
    let mut adam_b1 = Adam::new(hidden);
    let mut adam_w2 = Adam::new(hidden);
    let mut adam_b2 = Adam::new(1);

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let m = chunk.len();
            let xb = DMatrix::from_fn(m, d, |i, j| x[(chunk[i], j)]);
            let yb = DVector::from_fn(m, |i, _| y[chunk[i]]);
            // forward: pre (m x hidden), act, out (m)
            let mut pre = &xb * w1.transpose();
            for mut row in pre.row_iter_mut() {
                row += b1.transpose();
            }
            let act = pre.map(|a| a.max(0.0));
            let out = &act * &w2 + DVector::from_element(m, b2);
            let err = (out - yb) * (2.0 / m as f64);
            // backward
            let g_w2 = act.transpose() * &err + &w2 * weight_decay;
            let g_b2 = err.sum();
            let mut g_act = &err * w2.transpose();
            g_act.zip_apply(&pre, |g, p| {
                if p <= 0.0 {
                    *g = 0.0
                }
            });
            let g_w1 = g_act.transpose() * &xb + &w1 * weight_decay;
            let g_b1 = g_act.row_sum().transpose();

            adam_w1.step(w1.as_mut_slice(), g_w1.as_slice(), lr);
            adam_b1.step(b1.as_mut_slice(), g_b1.as_slice(), lr);
            adam_w2.step(w2.as_mut_slice(), g_w2.as_slice(), lr);
            let mut b2s = [b2];
            adam_b2.step(&mut b2s, &[g_b2], lr);
            b2 = b2s[0];
        }
    }
    Fitted::Mlp { w1, b1, w2, b2 }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}
