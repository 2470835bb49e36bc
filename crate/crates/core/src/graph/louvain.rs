use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::Network;
use crate::seeds::rng_from_seed;

/// Weighted undirected multigraph used between Louvain levels.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn from_network(net: &Network) -> Self {
        let n = net.node_count();
        let mut adj = vec![Vec::new(); n];
        for (s, d, w) in net.edges() {
            if s < d {
                let back = net.weight(d, s).unwrap_or(0.0);
                adj[s].push((d, w + back));
                adj[d].push((s, w + back));
            }
        }
        Level {
            adj,
            self_loops: vec![0.0; n],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Weighted degree, counting a self-loop twice.
    fn strength(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|e| e.1).sum::<f64>() + 2.0 * self.self_loops[v]
    }
}

/// Louvain modularity optimization on the undirected graph with weights
/// `w_ij + w_ji`.
///
/// Nodes are visited in a seeded random order; ties between candidate
/// communities go to the lowest community index. Labels are dense and
/// numbered by first appearance in node order.
pub fn louvain(net: &Network, rng_seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(rng_seed);
    let mut level = Level::from_network(net);
    let mut membership: Vec<usize> = (0..net.node_count()).collect();
    let total: f64 = (0..level.len()).map(|v| level.strength(v)).sum();
    if total == 0.0 {
        return membership;
    }

    loop {
        let (assign, moved) = one_level(&level, total, &mut rng);
        if !moved {
            break;
        }
        let (dense, count) = relabel(&assign);
        for m in membership.iter_mut() {
            *m = dense[*m];
        }
        level = aggregate(&level, &dense, count);
    }
    relabel(&membership).0
}

fn one_level(level: &Level, total: f64, rng: &mut rand_chacha::ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.len();
    let mut comm: Vec<usize> = (0..n).collect();
    let strength: Vec<f64> = (0..n).map(|v| level.strength(v)).collect();
    let mut comm_total = strength.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut moved_any = false;
    let mut links: HashMap<usize, f64> = HashMap::new();
    loop {
        let mut moved = false;
        for &v in &order {
            let current = comm[v];
            links.clear();
            for &(u, w) in &level.adj[v] {
                if u != v {
                    *links.entry(comm[u]).or_default() += w;
                }
            }
            comm_total[current] -= strength[v];
            let gain = |c: usize, to_c: f64| to_c - comm_total[c] * strength[v] / total;

            let mut best = current;
            let mut best_gain = gain(current, links.get(&current).copied().unwrap_or(0.0));
            let mut candidates: Vec<(usize, f64)> = links.iter().map(|(&c, &w)| (c, w)).collect();
            candidates.sort_unstable_by_key(|c| c.0);
            for (c, to_c) in candidates {
                let g = gain(c, to_c);
                // ascending scan: equal gains keep the current or lowest index
                if g > best_gain + 1e-12 {
                    best = c;
                    best_gain = g;
                }
            }
            comm_total[best] += strength[v];
            if best != current {
                comm[v] = best;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, moved_any)
}

/// Dense relabeling by first appearance.
fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

fn aggregate(level: &Level, dense: &[usize], count: usize) -> Level {
    let mut weights: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
    let mut self_loops = vec![0.0; count];
    for v in 0..level.len() {
        let cv = dense[v];
        self_loops[cv] += level.self_loops[v];
        for &(u, w) in &level.adj[v] {
            let cu = dense[u];
            if cu == cv {
                // each internal edge is seen from both endpoints
                self_loops[cv] += 0.5 * w;
            } else {
                *weights[cv].entry(cu).or_default() += w;
            }
        }
    }
    let adj = weights
        .into_iter()
        .map(|m| {
            let mut v: Vec<(usize, f64)> = m.into_iter().collect();
            v.sort_unstable_by_key(|e| e.0);
            v
        })
        .collect();
    Level { adj, self_loops }
}

/// Newman modularity of a labeling on the undirected graph with weights
/// `w_ij + w_ji`.
pub fn modularity(net: &Network, labels: &[usize]) -> f64 {
    let n = net.node_count();
    let mut strength = vec![0.0; n];
    let mut internal = 0.0;
    let mut total = 0.0;
    for (s, d, w) in net.edges() {
        // each directed edge contributes to both endpoints of A = W + W^T
        strength[s] += w;
        strength[d] += w;
        total += 2.0 * w;
        if labels[s] == labels[d] {
            internal += 2.0 * w;
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    let mut comm_strength: HashMap<usize, f64> = HashMap::new();
    for v in 0..n {
        *comm_strength.entry(labels[v]).or_default() += strength[v];
    }
    internal / total - comm_strength.values().map(|s| (s / total).powi(2)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::super::test_graphs::*;
    use super::*;

    #[test]
    fn two_cliques_split_matches_exhaustive_optimum() {
        let net = two_cliques(5);
        // exhaustive over 2-partitions with node 0 pinned to side 0
        let mut best = (f64::NEG_INFINITY, 0u32);
        for mask in 0u32..(1 << 9) {
            let labels: Vec<usize> =
                (0..10).map(|v| if v == 0 { 0 } else { ((mask >> (v - 1)) & 1) as usize }).collect();
            if labels.iter().all(|&l| l == 0) {
                continue;
            }
            let q = modularity(&net, &labels);
            if q > best.0 {
                best = (q, mask);
            }
        }
        let oracle: Vec<usize> =
            (0..10).map(|v| if v == 0 { 0 } else { ((best.1 >> (v - 1)) & 1) as usize }).collect();
        assert_eq!(oracle, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

        for seed in 0..10 {
            let labels = louvain(&net, seed);
            assert_eq!(labels, oracle, "seed {seed}");
            assert!((modularity(&net, &labels) - best.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_nodes_keep_singleton_labels() {
        let net = Network::from_edges(names(3), vec![]).unwrap();
        assert_eq!(louvain(&net, 0), vec![0, 1, 2]);
    }

    #[test]
    fn deterministic_given_seed() {
        let net = ring(30);
        assert_eq!(louvain(&net, 9), louvain(&net, 9));
    }
}
