use std::collections::VecDeque;

use super::Network;
use crate::{Error, Result};

/// Hop distance from each adopter to its nearest seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedDistances {
    /// `None` for adopters no seed can reach.
    pub distances: Vec<Option<u32>>,
}

impl SeedDistances {
    pub fn unreachable(&self) -> usize {
        self.distances.iter().filter(|d| d.is_none()).count()
    }

    /// Mean over reachable adopters; `None` when no adopter is reachable.
    pub fn mean(&self) -> Option<f64> {
        let reach: Vec<u32> = self.distances.iter().flatten().copied().collect();
        if reach.is_empty() {
            None
        } else {
            Some(reach.iter().map(|&d| d as f64).sum::<f64>() / reach.len() as f64)
        }
    }
}

/// Multi-source BFS on the undirected simple graph.
pub fn nearest_seed_distances(
    net: &Network,
    adopters: &[usize],
    seeds: &[usize],
) -> Result<SeedDistances> {
    if seeds.is_empty() {
        return Err(Error::invalid("nearest-seed distance needs at least one seed"));
    }
    for &v in adopters.iter().chain(seeds) {
        net.check_node(v)?;
    }
    let mut dist = vec![u32::MAX; net.node_count()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &u in net.neighbors(v) {
            let u = u as usize;
            if dist[u] == u32::MAX {
                dist[u] = next;
                queue.push_back(u);
            }
        }
    }
    Ok(SeedDistances {
        distances: adopters
            .iter()
            .map(|&a| (dist[a] != u32::MAX).then_some(dist[a]))
            .collect(),
    })
}

/// Directed edges among `adopters` over `|A| (|A| - 1)`. Duplicate adopters
/// are counted once.
pub fn adopter_edge_density(net: &Network, adopters: &[usize]) -> Result<f64> {
    let mut set: Vec<usize> = adopters.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() < 2 {
        return Err(Error::invalid("edge density needs at least two adopters"));
    }
    for &v in &set {
        net.check_node(v)?;
    }
    let mut member = vec![false; net.node_count()];
    for &v in &set {
        member[v] = true;
    }
    let edges: usize = set
        .iter()
        .map(|&v| net.neighbors(v).iter().filter(|&&u| member[u as usize]).count())
        .sum();
    let a = set.len() as f64;
    Ok(edges as f64 / (a * (a - 1.0)))
}
