use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::World;
use crate::engine::{run_simulation, Cascade, SimulationConfig, Variant};
use crate::graph::{rewire_configuration_model, Network};
use crate::identity::{Category, CategorySchema, HashtagSpec, IdentityMatrix};
use crate::metrics::RegionMap;
use crate::seeds::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Parameters of a stochastic-block-model world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthWorldParams {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub intra_p: f64,
    pub inter_p: f64,
    /// 0 gives every pair the average edge probability; 1 gives the
    /// block-specific probabilities.
    pub homophily: f64,
    /// Beta concentration of each register around its block center;
    /// infinity pins every agent to the center.
    pub identity_concentration: f64,
    pub region_grid: (usize, usize),
    pub categories: usize,
    pub registers_per_category: usize,
    /// Chance an agent lives in its block's home region rather than a
    /// uniformly random one.
    pub home_region_prob: f64,
    pub rng_seed: u64,
}

impl Default for SynthWorldParams {
    fn default() -> Self {
        SynthWorldParams {
            blocks: 10,
            nodes_per_block: 100,
            intra_p: 0.08,
            inter_p: 0.002,
            homophily: 0.8,
            identity_concentration: 20.0,
            region_grid: (4, 4),
            categories: 5,
            registers_per_category: 2,
            home_region_prob: 0.75,
            rng_seed: 0,
        }
    }
}

impl SynthWorldParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("blocks", self.blocks),
            ("nodes_per_block", self.nodes_per_block),
            ("region rows", self.region_grid.0),
            ("region cols", self.region_grid.1),
            ("categories", self.categories),
            ("registers_per_category", self.registers_per_category),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("intra_p", self.intra_p),
            ("inter_p", self.inter_p),
            ("homophily", self.homophily),
            ("home_region_prob", self.home_region_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.identity_concentration > 0.0) {
            return Err(Error::invalid("identity_concentration must be positive"));
        }
        if self.blocks.checked_mul(self.nodes_per_block).is_none_or(|n| n > u32::MAX as usize) {
            return Err(Error::invalid("world too large"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.blocks * self.nodes_per_block
    }

    /// Reads `key = value` lines, optionally under `[world]`.
    pub fn from_ini(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::invalid(format!("world config: {e}")))?;
        let mut p = SynthWorldParams::default();
        for section in [None, Some("world")] {
            let Some(props) = ini.section(section) else { continue };
            for (key, value) in props.iter() {
                p.set(key.trim(), value.trim())?;
            }
        }
        p.validate()?;
        Ok(p)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::invalid(format!("world config key `{key}`: cannot parse `{v}`")))
        }
        match key {
            "blocks" => self.blocks = num(key, value)?,
            "nodes_per_block" => self.nodes_per_block = num(key, value)?,
            "intra_p" => self.intra_p = num(key, value)?,
            "inter_p" => self.inter_p = num(key, value)?,
            "homophily" => self.homophily = num(key, value)?,
            "identity_concentration" => self.identity_concentration = num(key, value)?,
            "region_rows" => self.region_grid.0 = num(key, value)?,
            "region_cols" => self.region_grid.1 = num(key, value)?,
            "categories" => self.categories = num(key, value)?,
            "registers_per_category" => self.registers_per_category = num(key, value)?,
            "home_region_prob" => self.home_region_prob = num(key, value)?,
            "rng_seed" => self.rng_seed = num(key, value)?,
            other => return Err(Error::invalid(format!("unknown world config key `{other}`"))),
        }
        Ok(())
    }

    /// Edge probabilities `(same block, different blocks)` after mixing
    /// with the average by `homophily`.
    pub fn edge_probabilities(&self) -> (f64, f64) {
        let (b, n) = (self.blocks as f64, self.nodes_per_block as f64);
        let same = b * n * (n - 1.0) / 2.0;
        let cross = b * (b - 1.0) / 2.0 * n * n;
        let mean = if same + cross > 0.0 {
            (self.intra_p * same + self.inter_p * cross) / (same + cross)
        } else {
            0.0
        };
        let h = self.homophily;
        ((1.0 - h) * mean + h * self.intra_p, (1.0 - h) * mean + h * self.inter_p)
    }
}

/// A generated world and the block of every node.
#[derive(Debug, Clone)]
pub struct GeneratedWorld {
    pub world: World,
    pub blocks: Vec<usize>,
}

pub fn generate_world(params: &SynthWorldParams) -> Result<GeneratedWorld> {
    params.validate()?;
    let mut rng = rng_from_seed(params.rng_seed);
    let n = params.node_count();
    let m = params.nodes_per_block;
    let blocks: Vec<usize> = (0..n).map(|v| v / m).collect();

    let (p_same, p_cross) = params.edge_probabilities();
    let weight = Poisson::new(1.0).unwrap();
    let mut edges = Vec::new();
    let mut add_pair = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        edges.push((a, b, 1.0 + weight.sample(rng)));
        edges.push((b, a, 1.0 + weight.sample(rng)));
    };
    for ba in 0..params.blocks {
        let base_a = ba * m;
        // pairs inside the block, row by row over the upper triangle
        let total = (m * (m.saturating_sub(1)) / 2) as u64;
        let mut row = 0usize;
        let mut row_start = 0u64;
        for k in skip_indices(total, p_same, &mut rng) {
            while k >= row_start + (m - 1 - row) as u64 {
                row_start += (m - 1 - row) as u64;
                row += 1;
            }
            let col = row + 1 + (k - row_start) as usize;
            add_pair(base_a + row, base_a + col, &mut rng);
        }
        for bb in (ba + 1)..params.blocks {
            let base_b = bb * m;
            for k in skip_indices((m * m) as u64, p_cross, &mut rng) {
                let (i, j) = ((k / m as u64) as usize, (k % m as u64) as usize);
                add_pair(base_a + i, base_b + j, &mut rng);
            }
        }
    }
    let names: Vec<String> = (0..n).map(|v| format!("u{v}")).collect();
    let net = Network::from_edges(names, edges)?;

    let ids = block_identities(params, &blocks, &mut rng)?;
    let regions = place_regions(params, &blocks, &mut rng)?;

    let giant = largest_component(&net);
    if (giant as f64) < 0.5 * n as f64 {
        log::warn!("largest connected component covers only {giant} of {n} nodes");
    }
    Ok(GeneratedWorld {
        world: World { net, ids, regions },
        blocks,
    })
}

/// Indices in `0..total` kept independently with probability `p`, drawn
/// by geometric skipping.
fn skip_indices(total: u64, p: f64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = Vec::new();
    if p <= 0.0 || total == 0 {
        return out;
    }
    if p >= 1.0 {
        return (0..total).collect();
    }
    let log_q = (-p).ln_1p();
    let mut k: u64 = 0;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (total - k) as f64 {
            return out;
        }
        k += skip as u64;
        out.push(k);
        k += 1;
        if k >= total {
            return out;
        }
    }
}

fn block_identities(params: &SynthWorldParams, blocks: &[usize], rng: &mut ChaCha8Rng) -> Result<IdentityMatrix> {
    let categories = (0..params.categories)
        .map(|c| Category {
            name: format!("cat{c}"),
            registers: (0..params.registers_per_category).map(|r| format!("cat{c}_r{r}")).collect(),
        })
        .collect();
    let schema = CategorySchema::new(categories)?;
    let k = schema.dims();
    let centers: Vec<Vec<f64>> = (0..params.blocks)
        .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
        .collect();
    let kappa = params.identity_concentration;
    let mut values = Vec::with_capacity(blocks.len() * k);
    for &b in blocks {
        for &c in &centers[b] {
            let v = if kappa.is_infinite() {
                c
            } else {
                let c = c.clamp(0.01, 0.99);
                Beta::new(kappa * c, kappa * (1.0 - c))
                    .map_err(|e| Error::invalid(format!("identity sampler: {e}")))?
                    .sample(rng)
            };
            values.push(v.clamp(0.0, 1.0));
        }
    }
    IdentityMatrix::new(schema, values)
}

fn place_regions(params: &SynthWorldParams, blocks: &[usize], rng: &mut ChaCha8Rng) -> Result<RegionMap> {
    let (rows, cols) = params.region_grid;
    let r = rows * cols;
    // spread block homes evenly over the grid
    let home = |b: usize| b * r / params.blocks.max(1) % r;
    let node_region = blocks
        .iter()
        .map(|&b| {
            if rng.random::<f64>() < params.home_region_prob {
                home(b)
            } else {
                rng.random_range(0..r)
            }
        })
        .collect();
    RegionMap::grid(rows, cols, node_region)
}

fn largest_component(net: &Network) -> usize {
    let n = net.node_count();
    let mut seen = vec![false; n];
    let mut best = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &u in net.neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    queue.push_back(u as usize);
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// `count` nodes forming a breadth-first neighborhood around a random
/// start node, so seeds cluster in the network as early adopters do.
pub fn sample_seed_group(net: &Network, count: usize, rng_seed: u64) -> Result<Vec<usize>> {
    let n = net.node_count();
    if count == 0 || count > n {
        return Err(Error::invalid(format!("cannot pick {count} seeds from {n} nodes")));
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut picked = Vec::with_capacity(count);
    let mut seen = vec![false; n];
    while picked.len() < count {
        let start = rng.random_range(0..n);
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            picked.push(v);
            if picked.len() == count {
                break;
            }
            for &u in net.neighbors(v) {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    queue.push_back(u as usize);
                }
            }
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Ground truth of a planted cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantTruth {
    pub variant: Variant,
    pub stickiness: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCascade {
    pub spec: HashtagSpec,
    pub cascade: Cascade,
    pub truth: PlantTruth,
}

/// Run the engine as the data-generating process. The hashtag identity is
/// inferred from the seeds; the identity-only variant runs on a rewiring
/// derived from `cfg.rng_seed`. The returned spec records the cascade's
/// size at sample rate 1.
pub fn plant_cascade(
    world: &World,
    tag: &str,
    seeds: Vec<usize>,
    variant: Variant,
    stickiness: f64,
    cfg: &SimulationConfig,
) -> Result<PlantedCascade> {
    let mut spec = HashtagSpec::from_seeds(tag, &world.ids, seeds, 1, 1.0)?;
    let cfg = SimulationConfig {
        variant,
        stickiness,
        ..cfg.clone()
    };
    let cascade = if variant.rewires() {
        let rewired = rewire_configuration_model(&world.net, derive_seed(cfg.rng_seed, &["plant", "rewire"]))?;
        run_simulation(&rewired, &world.ids, &spec, &cfg)?
    } else {
        run_simulation(&world.net, &world.ids, &spec, &cfg)?
    };
    spec.empirical_size = cascade.uses() as u64;
    Ok(PlantedCascade {
        spec,
        cascade,
        truth: PlantTruth {
            variant,
            stickiness,
            rng_seed: cfg.rng_seed,
        },
    })
}
