//! Discrete-time stochastic simulator of hashtag usage.
//!
//! Seeds use the hashtag once at `t = 0`. At every later step, an agent with
//! at least one in-neighbor that used the hashtag on the previous step is
//! *exposed*: its usage probability is recomputed as
//!
//! ```text
//! p = S_h * delta_ih * eta(n) * sum_{j adopted} w_ji delta_ji / sum_{k} w_ki delta_ki
//! ```
//!
//! where `n` counts earlier exposures and `eta` is the cosine novelty decay.
//! An agent that was exposed before but not on this step has its probability
//! multiplied by the decay rate `r`, starting from the probability
//! re-evaluated with its updated exposure count. Every agent then uses the
//! hashtag with its current probability. The run stops once cumulative usage grows by
//! less than `stop_growth` over `stop_window` steps (after `warmup` steps),
//! or at `max_steps`.
//!
//! Decaying probabilities are not touched step by step. After each exposure
//! the next decay-driven use is drawn directly by thinning a geometric skip,
//! which yields the same per-step Bernoulli process while only costing work
//! when an agent actually uses the hashtag.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Network;
use crate::identity::{edge_similarities, hashtag_similarities, DeltaMode, HashtagSpec, IdentityMatrix};
use crate::seeds::rng_from_seed;
use crate::{Error, Result};

/// Which diffusion mechanism a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "network+identity")]
    NetworkIdentity,
    #[serde(rename = "network-only")]
    NetworkOnly,
    /// Identity terms active on a configuration-model rewiring of the network.
    #[serde(rename = "identity-only")]
    IdentityOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NetworkIdentity, Variant::NetworkOnly, Variant::IdentityOnly];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NetworkIdentity => "network+identity",
            Variant::NetworkOnly => "network-only",
            Variant::IdentityOnly => "identity-only",
        }
    }

    pub fn uses_identity(self) -> bool {
        !matches!(self, Variant::NetworkOnly)
    }

    /// Whether the variant runs on a rewired copy of the network.
    pub fn rewires(self) -> bool {
        matches!(self, Variant::IdentityOnly)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "network+identity" | "network-identity" | "netid" | "ni" => Ok(Variant::NetworkIdentity),
            "network-only" | "network" | "net" => Ok(Variant::NetworkOnly),
            "identity-only" | "identity" | "id" => Ok(Variant::IdentityOnly),
            other => Err(Error::invalid(format!(
                "unknown model `{other}` (expected network+identity, network-only or identity-only)"
            ))),
        }
    }
}

/// How exposures are counted toward novelty decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureCounting {
    /// One exposure per step in which at least one in-neighbor used it.
    #[default]
    PerStep,
    /// One exposure per using in-neighbor.
    PerNeighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub stickiness: f64,
    pub decay: f64,
    pub novelty_cap: u32,
    pub variant: Variant,
    pub max_steps: u32,
    pub stop_window: u32,
    pub stop_growth: f64,
    pub warmup: u32,
    pub rng_seed: u64,
    pub exposure_counting: ExposureCounting,
    pub delta_mode: DeltaMode,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            stickiness: 0.5,
            decay: 0.9,
            novelty_cap: 20,
            variant: Variant::NetworkIdentity,
            max_steps: 2000,
            stop_window: 10,
            stop_growth: 0.01,
            warmup: 100,
            rng_seed: 0,
            exposure_counting: ExposureCounting::PerStep,
            delta_mode: DeltaMode::Normalized,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        // zero stickiness is allowed for seed-only control runs; calibration
        // searches [0.1, 1]
        if !(0.0..=1.0).contains(&self.stickiness) {
            return Err(Error::invalid(format!("stickiness {} outside [0, 1]", self.stickiness)));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::invalid(format!("decay {} outside [0, 1]", self.decay)));
        }
        if self.novelty_cap == 0 {
            return Err(Error::invalid("novelty_cap must be at least 1"));
        }
        if self.stop_window == 0 {
            return Err(Error::invalid("stop_window must be at least 1"));
        }
        if !(self.stop_growth >= 0.0) {
            return Err(Error::invalid("stop_growth must be nonnegative"));
        }
        Ok(())
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        SimulationConfig { rng_seed, ..self.clone() }
    }

    pub fn with_stickiness(&self, stickiness: f64) -> Self {
        SimulationConfig { stickiness, ..self.clone() }
    }

    /// Parse `key = value` lines; an optional `[simulation]` section is
    /// accepted. Missing keys keep their defaults.
    pub fn from_ini(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        let mut cfg = SimulationConfig::default();
        let sections = [None, Some("simulation")];
        for section in sections {
            let Some(props) = ini.section(section) else { continue };
            for (key, value) in props.iter() {
                cfg.set(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("config key `{key}`: cannot parse `{v}`")))
        }
        match key.trim() {
            "stickiness" => self.stickiness = num(key, value)?,
            "decay" => self.decay = num(key, value)?,
            "novelty_cap" => self.novelty_cap = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "max_steps" => self.max_steps = num(key, value)?,
            "stop_window" => self.stop_window = num(key, value)?,
            "stop_growth" => self.stop_growth = num(key, value)?,
            "warmup" => self.warmup = num(key, value)?,
            "rng_seed" => self.rng_seed = num(key, value)?,
            "exposure_counting" => {
                self.exposure_counting = match value.trim() {
                    "per-step" => ExposureCounting::PerStep,
                    "per-neighbor" => ExposureCounting::PerNeighbor,
                    v => return Err(Error::invalid(format!("unknown exposure_counting `{v}`"))),
                }
            }
            "delta_mode" => {
                self.delta_mode = match value.trim() {
                    "normalized" => DeltaMode::Normalized,
                    "literal" => DeltaMode::Literal,
                    v => return Err(Error::invalid(format!("unknown delta_mode `{v}`"))),
                }
            }
            other => return Err(Error::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn to_ini(&self) -> String {
        let counting = match self.exposure_counting {
            ExposureCounting::PerStep => "per-step",
            ExposureCounting::PerNeighbor => "per-neighbor",
        };
        let mode = match self.delta_mode {
            DeltaMode::Normalized => "normalized",
            DeltaMode::Literal => "literal",
        };
        format!(
            "stickiness={}\ndecay={}\nnovelty_cap={}\nvariant={}\nmax_steps={}\nstop_window={}\n\
             stop_growth={}\nwarmup={}\nrng_seed={}\nexposure_counting={}\ndelta_mode={}\n",
            self.stickiness,
            self.decay,
            self.novelty_cap,
            self.variant,
            self.max_steps,
            self.stop_window,
            self.stop_growth,
            self.warmup,
            self.rng_seed,
            counting,
            mode
        )
    }
}

/// Novelty multiplier: 1 before any exposure, 0 from `theta` exposures on.
pub fn novelty(exposures: u32, theta: u32) -> Result<f64> {
    if theta == 0 {
        return Err(Error::invalid("novelty cap must be positive"));
    }
    Ok(novelty_unchecked(exposures, theta))
}

fn novelty_unchecked(exposures: u32, theta: u32) -> f64 {
    let ratio = exposures.min(theta) as f64 / theta as f64;
    0.5 * ((ratio * std::f64::consts::PI).cos() + 1.0)
}

/// One use of the hashtag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub agent: usize,
    pub t: u32,
}

/// A time-ordered list of uses together with the seed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cascade {
    pub events: Vec<UsageEvent>,
    pub seeds: Vec<usize>,
    /// Number of timesteps the cascade spans (`0..duration`).
    pub duration: u32,
}

impl Cascade {
    pub fn new(events: Vec<UsageEvent>, seeds: Vec<usize>, duration: Option<u32>) -> Result<Self> {
        if events.windows(2).any(|w| w[0].t > w[1].t) {
            return Err(Error::invalid("cascade events are not sorted by time"));
        }
        let span = events.last().map_or(0, |e| e.t + 1);
        let duration = duration.unwrap_or(span);
        if duration < span {
            return Err(Error::invalid(format!(
                "cascade duration {duration} shorter than last event at t={}",
                span - 1
            )));
        }
        Ok(Cascade { events, seeds, duration })
    }

    pub fn uses(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct agents in order of first use.
    pub fn adopters(&self) -> Vec<usize> {
        let mut seen = std::collections::HashSet::new();
        self.events
            .iter()
            .filter(|e| seen.insert(e.agent))
            .map(|e| e.agent)
            .collect()
    }

    /// Uses per timestep over `0..duration`.
    pub fn usage_curve(&self) -> Vec<f64> {
        let mut curve = vec![0.0; self.duration as usize];
        for e in &self.events {
            curve[e.t as usize] += 1.0;
        }
        curve
    }

    pub fn check_nodes(&self, net: &Network) -> Result<()> {
        for a in self.events.iter().map(|e| e.agent).chain(self.seeds.iter().copied()) {
            net.check_node(a)?;
        }
        Ok(())
    }

    /// JSON-lines: a header record with the seeds, then one `{agent, t}` per
    /// line. Agents are written as the network's node ids.
    pub fn write_jsonl<W: Write>(&self, net: &Network, tag: Option<&str>, mut out: W) -> Result<()> {
        let header = CascadeHeader {
            tag: tag.map(str::to_string),
            seeds: self.seeds.iter().map(|&s| net.id(s).to_string()).collect(),
            duration: Some(self.duration),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(
                &mut out,
                &EventRecord {
                    agent: net.id(e.agent).to_string(),
                    t: e.t,
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Inverse of [`Cascade::write_jsonl`]. Returns the optional tag too.
    pub fn read_jsonl<R: BufRead>(reader: R, net: &Network) -> Result<(Self, Option<String>)> {
        let mut lines = reader.lines().enumerate().filter(|(_, l)| {
            l.as_ref().map_or(true, |s| !s.trim().is_empty())
        });
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::invalid("cascade file is empty"))?;
        let header: CascadeHeader = serde_json::from_str(&first?)
            .map_err(|e| Error::parse(1, format!("bad cascade header: {e}")))?;
        let lookup = |id: &str, line: usize| {
            net.index_of(id)
                .ok_or_else(|| Error::parse(line, format!("unknown node `{id}`")))
        };
        let seeds = header
            .seeds
            .iter()
            .map(|s| lookup(s, 1))
            .collect::<Result<Vec<_>>>()?;
        let mut events = Vec::new();
        for (i, line) in lines {
            let rec: EventRecord = serde_json::from_str(&line?)
                .map_err(|e| Error::parse(i + 1, format!("bad event: {e}")))?;
            events.push(UsageEvent {
                agent: lookup(&rec.agent, i + 1)?,
                t: rec.t,
            });
        }
        Ok((Cascade::new(events, seeds, header.duration)?, header.tag))
    }
}

#[derive(Serialize, Deserialize)]
struct CascadeHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    seeds: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    agent: String,
    t: u32,
}

/// Similarity terms for one hashtag on one network, shared read-only across
/// runs.
#[derive(Debug, Clone)]
pub struct PreparedHashtag<'a> {
    net: &'a Network,
    seeds: Vec<usize>,
    hashtag_sim: Vec<f64>,
    /// Neighbor similarity per edge id (edge `j -> i` holds `delta_ji`).
    edge_sim: Vec<f64>,
    /// `sum_k w_ki delta_ki` over in-neighbors of each node.
    denom: Vec<f64>,
}

impl<'a> PreparedHashtag<'a> {
    /// For [`Variant::NetworkOnly`] every similarity is 1. For
    /// [`Variant::IdentityOnly`] pass the rewired network.
    pub fn new(
        net: &'a Network,
        ids: &IdentityMatrix,
        spec: &HashtagSpec,
        variant: Variant,
        mode: DeltaMode,
    ) -> Result<Self> {
        ids.check_network(net)?;
        spec.validate(ids)?;
        let mut seeds = spec.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let (hashtag_sim, edge_sim) = if variant.uses_identity() {
            (
                hashtag_similarities(ids, spec, mode),
                edge_similarities(net, ids, &spec.relevant_dims, mode),
            )
        } else {
            (vec![1.0; net.node_count()], vec![1.0; net.edge_count()])
        };
        let denom = (0..net.node_count())
            .map(|i| net.in_edges(i).map(|(_, w, e)| w * edge_sim[e]).sum())
            .collect();
        Ok(PreparedHashtag {
            net,
            seeds,
            hashtag_sim,
            edge_sim,
            denom,
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn hashtag_similarity(&self) -> &[f64] {
        &self.hashtag_sim
    }

    /// Run one simulation. `cfg.variant` is ignored here; it was fixed when
    /// the similarity terms were prepared.
    pub fn simulate(&self, cfg: &SimulationConfig) -> Result<Cascade> {
        cfg.validate()?;
        Simulation::new(self, cfg).run()
    }
}

const UNSCHEDULED: u32 = u32::MAX;

struct Simulation<'p, 'a> {
    prep: &'p PreparedHashtag<'a>,
    cfg: &'p SimulationConfig,
    rng: ChaCha8Rng,
    exposures: Vec<u32>,
    adopted: Vec<bool>,
    numer: Vec<f64>,
    /// Probability set at the agent's last exposure.
    base_prob: Vec<f64>,
    last_exposed: Vec<u32>,
    scheduled: Vec<u32>,
    stamp: Vec<u32>,
    hits: Vec<u32>,
    queue: BinaryHeap<Reverse<(u32, u32)>>,
}

impl<'p, 'a> Simulation<'p, 'a> {
    fn new(prep: &'p PreparedHashtag<'a>, cfg: &'p SimulationConfig) -> Self {
        let n = prep.net.node_count();
        Simulation {
            prep,
            cfg,
            rng: rng_from_seed(cfg.rng_seed),
            exposures: vec![0; n],
            adopted: vec![false; n],
            numer: vec![0.0; n],
            base_prob: vec![0.0; n],
            last_exposed: vec![0; n],
            scheduled: vec![UNSCHEDULED; n],
            stamp: vec![UNSCHEDULED; n],
            hits: vec![0; n],
            queue: BinaryHeap::new(),
        }
    }

    fn run(mut self) -> Result<Cascade> {
        let net = self.prep.net;
        let cfg = self.cfg;
        let seeds = self.prep.seeds.clone();
        if seeds.is_empty() {
            return Err(Error::invalid("simulation needs at least one seed"));
        }
        let mut events: Vec<UsageEvent> = seeds.iter().map(|&s| UsageEvent { agent: s, t: 0 }).collect();
        for &s in &seeds {
            // a seed has heard the hashtag by using it
            self.exposures[s] = 1;
            self.adopted[s] = true;
        }
        self.add_adopters(&seeds);

        let mut cumulative = vec![events.len() as u64];
        let mut users_prev = seeds.clone();
        let mut exposed = Vec::new();
        let mut users_now = Vec::new();
        let mut new_adopters = Vec::new();
        let mut duration = 1;

        for t in 1..=cfg.max_steps {
            exposed.clear();
            for &u in &users_prev {
                for e in net.out_edge_range(u) {
                    let v = net.edge_target(e);
                    if self.stamp[v] != t {
                        self.stamp[v] = t;
                        self.hits[v] = 0;
                        exposed.push(v);
                    }
                    self.hits[v] += 1;
                }
            }
            exposed.sort_unstable();

            users_now.clear();
            new_adopters.clear();
            for &v in &exposed {
                let prob = self.exposure_probability(v);
                self.exposures[v] += match cfg.exposure_counting {
                    ExposureCounting::PerStep => 1,
                    ExposureCounting::PerNeighbor => self.hits[v],
                };
                // the decay chain starts from the value under the updated
                // exposure count
                self.base_prob[v] = self.exposure_probability(v);
                self.last_exposed[v] = t;
                self.scheduled[v] = UNSCHEDULED;
                if self.rng.random::<f64>() < prob {
                    self.emit(v, &mut users_now, &mut new_adopters);
                }
                self.schedule_decay_use(v, t);
            }

            while let Some(&Reverse((step, agent))) = self.queue.peek() {
                if step != t {
                    break;
                }
                self.queue.pop();
                let v = agent as usize;
                if self.scheduled[v] != t {
                    continue;
                }
                self.scheduled[v] = UNSCHEDULED;
                self.emit(v, &mut users_now, &mut new_adopters);
                self.schedule_decay_use(v, t);
            }

            users_now.sort_unstable();
            events.extend(users_now.iter().map(|&agent| UsageEvent { agent, t }));
            self.add_adopters(&new_adopters);
            std::mem::swap(&mut users_prev, &mut users_now);

            cumulative.push(events.len() as u64);
            duration = t + 1;
            if t >= cfg.warmup && t >= cfg.stop_window {
                let before = cumulative[(t - cfg.stop_window) as usize] as f64;
                let now = cumulative[t as usize] as f64;
                if now - before < cfg.stop_growth * before {
                    break;
                }
            }
        }
        Cascade::new(events, seeds, Some(duration))
    }

    fn exposure_probability(&self, v: usize) -> f64 {
        let cfg = self.cfg;
        let denom = self.prep.denom[v];
        let fraction = if denom > 0.0 { self.numer[v] / denom } else { 0.0 };
        let eta = novelty_unchecked(self.exposures[v], cfg.novelty_cap);
        let p = cfg.stickiness * self.prep.hashtag_sim[v] * eta * fraction;
        if cfg.delta_mode == DeltaMode::Normalized {
            debug_assert!((0.0..=1.0 + 1e-9).contains(&p), "usage probability {p} out of range");
        }
        p.clamp(0.0, 1.0)
    }

    fn emit(&mut self, v: usize, users: &mut Vec<usize>, new_adopters: &mut Vec<usize>) {
        users.push(v);
        if !self.adopted[v] {
            self.adopted[v] = true;
            new_adopters.push(v);
        }
    }

    fn add_adopters(&mut self, adopters: &[usize]) {
        let net = self.prep.net;
        for &j in adopters {
            for e in net.out_edge_range(j) {
                self.numer[net.edge_target(e)] += net.edge_weight(e) * self.prep.edge_sim[e];
            }
        }
    }

    fn schedule_decay_use(&mut self, v: usize, from: u32) {
        let next = next_decay_use(
            &mut self.rng,
            self.base_prob[v],
            self.cfg.decay,
            self.last_exposed[v],
            from,
            self.cfg.max_steps,
        );
        if let Some(step) = next {
            self.scheduled[v] = step;
            self.queue.push(Reverse((step, v as u32)));
        }
    }
}

/// First step after `from` (and at most `max_steps`) at which an agent whose
/// probability was `p0` at step `exposed_at`, and `p0 * r^k` `k` steps later,
/// uses the hashtag.
fn next_decay_use<R: Rng>(rng: &mut R, p0: f64, r: f64, exposed_at: u32, from: u32, max_steps: u32) -> Option<u32> {
    if p0 <= 0.0 || r <= 0.0 {
        return None;
    }
    let mut step = from;
    loop {
        // constant bound for every step after `step`; the true probabilities
        // only shrink from here
        let bound = p0 * r.powi((step + 1 - exposed_at) as i32);
        if bound < 1e-300 {
            return None;
        }
        let skip = if bound >= 1.0 {
            0.0
        } else {
            let u: f64 = rng.random();
            ((1.0 - u).ln() / (-bound).ln_1p()).floor()
        };
        let candidate = step as f64 + 1.0 + skip;
        if candidate > max_steps as f64 {
            return None;
        }
        step = candidate as u32;
        let actual = p0 * r.powi((step - exposed_at) as i32);
        if rng.random::<f64>() * bound < actual {
            return Some(step);
        }
    }
}

/// Prepare and run a single simulation.
pub fn run_simulation(
    net: &Network,
    ids: &IdentityMatrix,
    spec: &HashtagSpec,
    cfg: &SimulationConfig,
) -> Result<Cascade> {
    PreparedHashtag::new(net, ids, spec, cfg.variant, cfg.delta_mode)?.simulate(cfg)
}
