use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{Read, Write};

use super::primitives::SpatialWeights;
use crate::graph::Network;
use crate::{Error, Result};

/// Assignment of every node to a region plus symmetric region adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    names: Vec<String>,
    node_region: Vec<usize>,
    /// Undirected, each pair listed once.
    adjacency: Vec<(usize, usize, f64)>,
}

impl RegionMap {
    pub fn new(names: Vec<String>, node_region: Vec<usize>, adjacency: Vec<(usize, usize, f64)>) -> Result<Self> {
        let r = names.len();
        if r == 0 {
            return Err(Error::invalid("region map has no regions"));
        }
        if names.iter().collect::<HashSet<_>>().len() != r {
            return Err(Error::invalid("duplicate region name"));
        }
        if let Some(&bad) = node_region.iter().find(|&&x| x >= r) {
            return Err(Error::invalid(format!("node mapped to unknown region {bad}")));
        }
        let mut seen = HashSet::new();
        for &(a, b, w) in &adjacency {
            if a >= r || b >= r || a == b {
                return Err(Error::invalid(format!("bad region adjacency {a}-{b}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("region adjacency weight {w} must be finite and nonnegative")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid(format!(
                    "region adjacency {}-{} listed twice",
                    names[a], names[b]
                )));
            }
        }
        // canonical order: regions sorted by name, adjacency by region pair
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| names[a].cmp(&names[b]));
        let mut rank = vec![0; r];
        for (k, &old) in order.iter().enumerate() {
            rank[old] = k;
        }
        let names = order.iter().map(|&i| names[i].clone()).collect();
        let node_region = node_region.into_iter().map(|x| rank[x]).collect();
        let mut adjacency: Vec<(usize, usize, f64)> = adjacency
            .into_iter()
            .map(|(a, b, w)| (rank[a].min(rank[b]), rank[a].max(rank[b]), w))
            .collect();
        adjacency.sort_by_key(|e| (e.0, e.1));
        Ok(RegionMap {
            names,
            node_region,
            adjacency,
        })
    }

    /// `rows x cols` grid with rook adjacency of weight 1.
    pub fn grid(rows: usize, cols: usize, node_region: Vec<usize>) -> Result<Self> {
        let names = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| format!("r{r}c{c}")))
            .collect();
        let mut adjacency = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    adjacency.push((i, i + 1, 1.0));
                }
                if r + 1 < rows {
                    adjacency.push((i, i + cols, 1.0));
                }
            }
        }
        RegionMap::new(names, node_region, adjacency)
    }

    pub fn region_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn region_of(&self, node: usize) -> usize {
        self.node_region[node]
    }

    pub fn node_regions(&self) -> &[usize] {
        &self.node_region
    }

    pub fn adjacency(&self) -> &[(usize, usize, f64)] {
        &self.adjacency
    }

    pub fn check_network(&self, net: &Network) -> Result<()> {
        if self.node_region.len() != net.node_count() {
            return Err(Error::invalid(format!(
                "region map covers {} nodes, network has {}",
                self.node_region.len(),
                net.node_count()
            )));
        }
        Ok(())
    }

    pub fn agents_per_region(&self) -> Vec<usize> {
        let mut counts = vec![0; self.region_count()];
        for &r in &self.node_region {
            counts[r] += 1;
        }
        counts
    }

    /// Row-standardized weights over each region and its neighbors; the
    /// region itself carries weight 1 before standardization.
    pub fn spatial_weights(&self) -> SpatialWeights {
        let mut rows: SpatialWeights = (0..self.region_count()).map(|i| vec![(i, 1.0)]).collect();
        for &(a, b, w) in &self.adjacency {
            rows[a].push((b, w));
            rows[b].push((a, w));
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|e| e.0);
            let total: f64 = row.iter().map(|e| e.1).sum();
            row.iter_mut().for_each(|e| e.1 /= total);
        }
        rows
    }

    /// Unweighted hop distances from `from` to every region; `None` when
    /// unreachable.
    pub fn hops_from(&self, from: usize) -> Vec<Option<u32>> {
        let r = self.region_count();
        let mut adj = vec![Vec::new(); r];
        for &(a, b, _) in &self.adjacency {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut dist = vec![None; r];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap() + 1;
            for &u in &adj[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Reads `node_id,region` and `region_a,region_b,weight` tables, both
    /// with a header row. Region order is first appearance.
    pub fn read_csv<R1: Read, R2: Read>(nodes: R1, adjacency: R2, net: &Network) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut intern = |name: &str| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            index.insert(name.to_string(), names.len());
            names.push(name.to_string());
            names.len() - 1
        };
        let mut node_region = vec![usize::MAX; net.node_count()];
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(nodes);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 2 {
                return Err(Error::parse(line, "expected `node_id,region`"));
            }
            let v = net
                .index_of(&rec[0])
                .ok_or_else(|| Error::parse(line, format!("unknown node `{}`", &rec[0])))?;
            if node_region[v] != usize::MAX {
                return Err(Error::parse(line, format!("node `{}` mapped twice", &rec[0])));
            }
            node_region[v] = intern(&rec[1]);
        }
        if let Some(v) = node_region.iter().position(|&r| r == usize::MAX) {
            return Err(Error::invalid(format!("node `{}` has no region", net.id(v))));
        }
        let mut adj = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(adjacency);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 3 {
                return Err(Error::parse(line, "expected `region_a,region_b,weight`"));
            }
            let w: f64 = rec[2]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad weight `{}`", &rec[2])))?;
            adj.push((intern(&rec[0]), intern(&rec[1]), w));
        }
        RegionMap::new(names, node_region, adj)
    }

    pub fn write_csv<W1: Write, W2: Write>(&self, net: &Network, nodes: W1, adjacency: W2) -> Result<()> {
        let mut w = csv::Writer::from_writer(nodes);
        w.write_record(["node_id", "region"])?;
        for (v, &r) in self.node_region.iter().enumerate() {
            w.write_record([net.id(v), self.names[r].as_str()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(adjacency);
        w.write_record(["region_a", "region_b", "weight"])?;
        for &(a, b, wt) in &self.adjacency {
            w.write_record([self.names[a].as_str(), self.names[b].as_str(), &wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::ring;

    #[test]
    fn grid_weights_are_row_standardized() {
        let map = RegionMap::grid(2, 2, vec![0, 1, 2, 3]).unwrap();
        let w = map.spatial_weights();
        assert_eq!(w[0], vec![(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]);
        for row in &w {
            assert!((row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(map.hops_from(0), vec![Some(0), Some(1), Some(1), Some(2)]);
    }

    #[test]
    fn csv_round_trip() {
        let net = ring(4);
        let map = RegionMap::grid(1, 3, vec![0, 2, 2, 1]).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        map.write_csv(&net, &mut a, &mut b).unwrap();
        let back = RegionMap::read_csv(a.as_slice(), b.as_slice(), &net).unwrap();
        // region names survive; indices follow first appearance
        let names = |m: &RegionMap| (0..4).map(|v| m.names()[m.region_of(v)].clone()).collect::<Vec<_>>();
        assert_eq!(names(&back), names(&map));
        let (mut a2, mut b2) = (Vec::new(), Vec::new());
        back.write_csv(&net, &mut a2, &mut b2).unwrap();
        assert_eq!(a, a2);
    }

    #[test]
    fn validation() {
        let net = ring(3);
        assert!(RegionMap::read_csv("node_id,region\nn0,a\n".as_bytes(), "region_a,region_b,weight\n".as_bytes(), &net).is_err());
        assert!(RegionMap::new(vec!["a".into()], vec![1], vec![]).is_err());
        assert!(RegionMap::new(vec!["a".into(), "b".into()], vec![0], vec![(0, 1, -1.0)]).is_err());
        assert!(RegionMap::new(vec!["a".into(), "b".into()], vec![0], vec![(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }
}
