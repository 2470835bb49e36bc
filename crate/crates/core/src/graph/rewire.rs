use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Network;
use crate::seeds::rng_from_seed;
use crate::{Error, Result};

/// Swap attempts allowed per undirected edge while repairing loops and
/// multi-edges.
const REPAIR_BUDGET_PER_EDGE: usize = 50;
const MAX_RESTARTS: usize = 20;

/// Configuration-model random graph with the same nodes and degrees as `net`.
///
/// Reciprocal pairs are treated as undirected units: stubs are matched
/// uniformly at random, then self-loops and multi-edges are repaired with
/// random degree-preserving swaps. Each resulting pair becomes two directed
/// edges, and the multiset of original directed weights is shuffled onto the
/// new edges. In- and out-degree of every node are therefore preserved
/// exactly, as is the reciprocity invariant.
pub fn rewire_configuration_model(net: &Network, rng_seed: u64) -> Result<Network> {
    let mut rng = rng_from_seed(rng_seed);
    let mut pairs = None;
    for _ in 0..MAX_RESTARTS {
        if let Some(p) = match_stubs(net, &mut rng) {
            pairs = Some(p);
            break;
        }
    }
    let mut pairs = pairs.ok_or_else(|| {
        Error::Failed(format!(
            "configuration-model rewiring found no simple graph after {MAX_RESTARTS} restarts"
        ))
    })?;

    pairs.sort_unstable();
    let mut weights: Vec<f64> = net.edges().map(|(_, _, w)| w).collect();
    weights.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(pairs.len() * 2);
    for (k, &(a, b)) in pairs.iter().enumerate() {
        edges.push((a as usize, b as usize, weights[2 * k]));
        edges.push((b as usize, a as usize, weights[2 * k + 1]));
    }
    Network::from_edges(net.ids().to_vec(), edges)
}

/// One stub-matching attempt followed by swap repair. `None` when the repair
/// budget runs out.
fn match_stubs(net: &Network, rng: &mut ChaCha8Rng) -> Option<Vec<(u32, u32)>> {
    let mut stubs: Vec<u32> = Vec::with_capacity(net.edge_count());
    for v in 0..net.node_count() {
        stubs.extend(std::iter::repeat_n(v as u32, net.out_degree(v)));
    }
    stubs.shuffle(rng);
    let mut pairs: Vec<(u32, u32)> = stubs
        .chunks_exact(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect();

    let mut multiplicity: HashMap<(u32, u32), u32> = HashMap::with_capacity(pairs.len());
    for &p in &pairs {
        *multiplicity.entry(p).or_default() += 1;
    }
    let is_bad = |p: (u32, u32), mult: &HashMap<(u32, u32), u32>| p.0 == p.1 || mult[&p] > 1;

    let mut bad: Vec<usize> =
        (0..pairs.len()).filter(|&k| is_bad(pairs[k], &multiplicity)).collect();
    let budget = REPAIR_BUDGET_PER_EDGE * pairs.len().max(1);
    let mut attempts = 0usize;
    while let Some(&k) = bad.last() {
        if !is_bad(pairs[k], &multiplicity) {
            bad.pop();
            continue;
        }
        attempts += 1;
        if attempts > budget {
            return None;
        }
        let other = rng.random_range(0..pairs.len());
        if other == k {
            continue;
        }
        let (a, b) = pairs[k];
        let (c, d) = pairs[other];
        let (x1, x2) = if rng.random::<bool>() { ((a, c), (b, d)) } else { ((a, d), (b, c)) };
        let norm = |(u, v): (u32, u32)| (u.min(v), u.max(v));
        let (x1, x2) = (norm(x1), norm(x2));
        if x1.0 == x1.1 || x2.0 == x2.1 || x1 == x2 {
            continue;
        }
        if multiplicity.contains_key(&x1) || multiplicity.contains_key(&x2) {
            continue;
        }
        for old in [pairs[k], pairs[other]] {
            let m = multiplicity.get_mut(&old).expect("pair tracked");
            *m -= 1;
            if *m == 0 {
                multiplicity.remove(&old);
            }
        }
        multiplicity.insert(x1, 1);
        multiplicity.insert(x2, 1);
        pairs[k] = x1;
        pairs[other] = x2;
    }
    Some(pairs)
}
