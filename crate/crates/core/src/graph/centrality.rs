use serde::{Deserialize, Serialize};

use super::{louvain, Network};
use crate::{Error, Result};

/// Network position of a single node, as used by the M10 propensity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePositionFeatures {
    pub pagerank: f64,
    pub eigencentrality: f64,
    pub transitivity: f64,
    pub community: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PositionOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for PositionOptions {
    fn default() -> Self {
        PositionOptions {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 100_000,
            rng_seed: 0,
        }
    }
}

pub fn node_position_features(
    net: &Network,
    opts: &PositionOptions,
) -> Result<Vec<NodePositionFeatures>> {
    let pr = pagerank(net, opts.damping, opts.tol, opts.max_iter)?;
    let ev = eigencentrality(net, opts.tol, opts.max_iter)?;
    let tr = local_transitivity(net);
    let comm = louvain(net, opts.rng_seed);
    Ok((0..net.node_count())
        .map(|v| NodePositionFeatures {
            pagerank: pr[v],
            eigencentrality: ev[v],
            transitivity: tr[v],
            community: comm[v],
        })
        .collect())
}

/// Weighted PageRank by power iteration.
///
/// A node's out-weights define its transition distribution; nodes without
/// out-edges spread their mass uniformly. Iterates until the L1 change drops
/// below `tol`. The result sums to one.
pub fn pagerank(net: &Network, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let out_weight: Vec<f64> = (0..n).map(|v| net.out_edges(v).map(|(_, w)| w).sum()).collect();
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&v| out_weight[v] == 0.0).map(|v| rank[v]).sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|x| *x = base);
        for v in 0..n {
            if out_weight[v] == 0.0 {
                continue;
            }
            let share = damping * rank[v] / out_weight[v];
            for (t, w) in net.out_edges(v) {
                next[t] += share * w;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < tol {
            return Ok(rank);
        }
    }
    Err(Error::NoConvergence {
        what: "pagerank",
        iterations: max_iter,
    })
}

/// Eigenvector centrality on the weight-symmetrized adjacency
/// `(w_ij + w_ji) / 2`, unit L2 norm.
///
/// Power iteration runs on `A + I`, which has the same leading eigenvector
/// but no periodic oscillation on bipartite components.
pub fn eigencentrality(net: &Network, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = net.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let sym: Vec<f64> = net
        .edges()
        .map(|(s, d, w)| 0.5 * (w + net.weight(d, s).unwrap_or(0.0)))
        .collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    for _ in 0..max_iter {
        y.copy_from_slice(&x);
        for v in 0..n {
            let range = net.out_edge_range(v);
            let mut acc = 0.0;
            for e in range {
                acc += sym[e] * x[net.edge_target(e)];
            }
            y[v] += acc;
        }
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        y.iter_mut().for_each(|a| *a /= norm);
        let delta = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut y);
        if delta < tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        what: "eigencentrality",
        iterations: max_iter,
    })
}

/// Local clustering coefficient on the undirected simple graph. Nodes of
/// degree below two get 0.
pub fn local_transitivity(net: &Network) -> Vec<f64> {
    let n = net.node_count();
    let mut mark = vec![usize::MAX; n];
    let mut out = vec![0.0; n];
    for v in 0..n {
        let nbrs = net.neighbors(v);
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        for &u in nbrs {
            mark[u as usize] = v;
        }
        let mut links = 0usize;
        for &u in nbrs {
            for &w in net.neighbors(u as usize) {
                if w > u && mark[w as usize] == v {
                    links += 1;
                }
            }
        }
        out[v] = 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    out
}
