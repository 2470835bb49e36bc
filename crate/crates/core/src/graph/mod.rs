//! Directed, weighted, reciprocal social network and its structural analytics.
//!
//! Node identifiers in files are opaque strings; internally every node is a
//! dense index in `0..node_count`. Adjacency is stored twice in compressed
//! sparse row form (by source and by target) so that both "who do I reach"
//! and "who reaches me" are contiguous slices.

mod centrality;
mod distance;
mod io;
mod louvain;
mod rewire;

use std::collections::HashMap;

use crate::{Error, Result};

pub use centrality::{
    eigencentrality, local_transitivity, node_position_features, pagerank,
    NodePositionFeatures, PositionOptions,
};
pub use distance::{adopter_edge_density, nearest_seed_distances, SeedDistances};
pub use io::{load_edge_list, load_node_map, write_edge_list, write_node_map};
pub use louvain::{louvain, modularity};
pub use rewire::rewire_configuration_model;

/// Weighted directed graph in which every edge has a reverse edge.
///
/// Edge weights may differ between the two directions of a pair. The
/// structure is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    /// Position of each in-edge inside the out-edge arrays.
    in_edge_ids: Vec<u32>,
}

impl Network {
    /// Build a network from dense-indexed edges, checking every invariant.
    pub fn from_edges(ids: Vec<String>, mut edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = ids.len();
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many nodes"));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate node id `{id}`")));
            }
        }
        for &(s, d, w) in &edges {
            if s >= n || d >= n {
                return Err(Error::invalid(format!("edge ({s}, {d}) references unknown node")));
            }
            if s == d {
                return Err(Error::invalid(format!("self-loop on `{}`", ids[s])));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!(
                    "edge `{}` -> `{}` has nonpositive weight {w}",
                    ids[s], ids[d]
                )));
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        for pair in edges.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::invalid(format!(
                    "duplicate edge `{}` -> `{}`",
                    ids[pair[0].0], ids[pair[0].1]
                )));
            }
        }

        let mut out_offsets = vec![0usize; n + 1];
        for &(s, _, _) in &edges {
            out_offsets[s + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let out_targets: Vec<u32> = edges.iter().map(|e| e.1 as u32).collect();
        let out_weights: Vec<f64> = edges.iter().map(|e| e.2).collect();

        let mut in_offsets = vec![0usize; n + 1];
        for &(_, d, _) in &edges {
            in_offsets[d + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0u32; edges.len()];
        let mut in_edge_ids = vec![0u32; edges.len()];
        // edges are sorted by source, so each in-list comes out sorted by source
        for (eid, &(s, d, _)) in edges.iter().enumerate() {
            let slot = fill[d];
            in_sources[slot] = s as u32;
            in_edge_ids[slot] = eid as u32;
            fill[d] += 1;
        }

        let net = Network {
            ids,
            index,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_edge_ids,
        };
        for (s, d, _) in net.edges() {
            if net.edge_id(d, s).is_none() {
                return Err(Error::invalid(format!(
                    "unreciprocated edge `{}` -> `{}`",
                    net.ids[s], net.ids[d]
                )));
            }
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_offsets[node + 1] - self.out_offsets[node]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_offsets[node + 1] - self.in_offsets[node]
    }

    /// Out-edges of `node` as `(target, weight)`, sorted by target.
    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.out_offsets[node]..self.out_offsets[node + 1];
        self.out_targets[range.clone()]
            .iter()
            .zip(&self.out_weights[range])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Targets of `node`'s out-edges, sorted. On a reciprocal network these
    /// are also its undirected neighbors.
    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    /// Range of edge ids owned by `node` as a source.
    pub fn out_edge_range(&self, node: usize) -> std::ops::Range<usize> {
        self.out_offsets[node]..self.out_offsets[node + 1]
    }

    /// In-edges of `node` as `(source, weight, edge id)`, sorted by source.
    pub fn in_edges(&self, node: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let range = self.in_offsets[node]..self.in_offsets[node + 1];
        self.in_sources[range.clone()]
            .iter()
            .zip(&self.in_edge_ids[range])
            .map(|(&s, &e)| (s as usize, self.out_weights[e as usize], e as usize))
    }

    /// Target of an edge id.
    pub fn edge_target(&self, edge: usize) -> usize {
        self.out_targets[edge] as usize
    }

    pub fn edge_weight(&self, edge: usize) -> f64 {
        self.out_weights[edge]
    }

    /// Edge id of `src -> dst`, if present.
    pub fn edge_id(&self, src: usize, dst: usize) -> Option<usize> {
        let base = self.out_offsets[src];
        self.neighbors(src)
            .binary_search(&(dst as u32))
            .ok()
            .map(|k| base + k)
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.edge_id(src, dst).map(|e| self.out_weights[e])
    }

    /// All directed edges as `(src, dst, weight)`, sorted by `(src, dst)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |s| self.out_edges(s).map(move |(d, w)| (s, d, w)))
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "node index {node} outside network of {} nodes",
                self.node_count()
            )))
        }
    }
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use super::Network;

    pub fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    /// Reciprocal graph from undirected pairs, unit weights.
    pub fn undirected(n: usize, pairs: &[(usize, usize)]) -> Network {
        let mut edges = Vec::new();
        for &(a, b) in pairs {
            edges.push((a, b, 1.0));
            edges.push((b, a, 1.0));
        }
        Network::from_edges(names(n), edges).unwrap()
    }

    pub fn ring(n: usize) -> Network {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        undirected(n, &pairs)
    }

    pub fn star(leaves: usize) -> Network {
        let pairs: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        undirected(leaves + 1, &pairs)
    }

    pub fn two_cliques(size: usize) -> Network {
        let mut pairs = Vec::new();
        for block in 0..2 {
            let off = block * size;
            for a in 0..size {
                for b in (a + 1)..size {
                    pairs.push((off + a, off + b));
                }
            }
        }
        pairs.push((size - 1, size));
        undirected(2 * size, &pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::test_graphs::*;
    use super::*;

    #[test]
    fn rejects_unreciprocated_and_self_loops() {
        let err = Network::from_edges(names(2), vec![(0, 1, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("unreciprocated"));
        let err = Network::from_edges(names(1), vec![(0, 0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("self-loop"));
        let err =
            Network::from_edges(names(2), vec![(0, 1, 0.0), (1, 0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("nonpositive"));
    }

    #[test]
    fn in_edges_point_back_into_out_arrays() {
        let net = Network::from_edges(names(3), vec![
            (0, 1, 2.0),
            (1, 0, 1.0),
            (1, 2, 3.0),
            (2, 1, 4.0),
        ])
        .unwrap();
        let ins: Vec<_> = net.in_edges(1).collect();
        assert_eq!(ins.len(), 2);
        for (s, w, e) in ins {
            assert_eq!(net.edge_target(e), 1);
            assert_eq!(net.weight(s, 1), Some(w));
        }
        assert_eq!(net.weight(2, 1), Some(4.0));
        assert_eq!(net.weight(0, 2), None);
    }

    #[test]
    fn helpers_build_expected_shapes() {
        let r = ring(5);
        assert_eq!(r.edge_count(), 10);
        assert!((0..5).all(|i| r.out_degree(i) == 2 && r.in_degree(i) == 2));
        let s = star(3);
        assert_eq!(s.out_degree(0), 3);
        assert_eq!(two_cliques(5).edge_count(), 2 * 2 * 10 + 2);
    }
}
