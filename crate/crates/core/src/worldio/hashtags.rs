use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::synth::PlantTruth;
use super::World;
use crate::engine::{Cascade, UsageEvent};
use crate::identity::HashtagSpec;
use crate::{Error, Result};

/// One observed hashtag: its seeds, empirical cascade and optional
/// precomputed covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hashtag {
    pub spec: HashtagSpec,
    pub empirical: Cascade,
    pub topic: Option<String>,
    pub semantic_sparsity: Option<u32>,
    pub semantic_growth: Option<f64>,
    pub truth: Option<PlantTruth>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventJson {
    agent: String,
    t: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HashtagJson {
    tag: String,
    seeds: Vec<String>,
    #[serde(default = "one")]
    sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    empirical_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<u32>,
    events: Vec<EventJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    semantic_sparsity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    semantic_growth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<PlantTruth>,
}

fn one() -> f64 {
    1.0
}

impl Hashtag {
    /// Wrap a cascade, inferring the hashtag identity from its seeds. The
    /// empirical size is the number of observed events.
    pub fn from_cascade(world: &World, tag: &str, cascade: Cascade, sample_rate: f64) -> Result<Self> {
        let spec = HashtagSpec::from_seeds(tag, &world.ids, cascade.seeds.clone(), cascade.uses() as u64, sample_rate)?;
        Ok(Hashtag {
            spec,
            empirical: cascade,
            topic: None,
            semantic_sparsity: None,
            semantic_growth: None,
            truth: None,
        })
    }

    fn to_json(&self, world: &World) -> HashtagJson {
        let id = |v: usize| world.net.id(v).to_string();
        HashtagJson {
            tag: self.spec.tag.clone(),
            seeds: self.spec.seeds.iter().map(|&s| id(s)).collect(),
            sample_rate: self.spec.sample_rate,
            empirical_size: Some(self.spec.empirical_size),
            duration: Some(self.empirical.duration),
            events: self
                .empirical
                .events
                .iter()
                .map(|e| EventJson { agent: id(e.agent), t: e.t })
                .collect(),
            topic: self.topic.clone(),
            semantic_sparsity: self.semantic_sparsity,
            semantic_growth: self.semantic_growth,
            truth: self.truth,
        }
    }

    fn from_json(rec: HashtagJson, world: &World, line: usize) -> Result<Self> {
        let lookup = |id: &str| {
            world
                .net
                .index_of(id)
                .ok_or_else(|| Error::parse(line, format!("hashtag `{}`: unknown node `{id}`", rec.tag)))
        };
        let seeds = rec.seeds.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?;
        let events = rec
            .events
            .iter()
            .map(|e| Ok(UsageEvent { agent: lookup(&e.agent)?, t: e.t }))
            .collect::<Result<Vec<_>>>()?;
        if !(rec.sample_rate > 0.0 && rec.sample_rate <= 1.0) {
            return Err(Error::parse(line, format!("sample_rate {} outside (0, 1]", rec.sample_rate)));
        }
        if let Some(g) = rec.semantic_growth {
            if !(-1.0..=1.0).contains(&g) {
                return Err(Error::parse(line, format!("semantic_growth {g} outside [-1, 1]")));
            }
        }
        let size = rec.empirical_size.unwrap_or(events.len() as u64);
        let empirical = Cascade::new(events, seeds.clone(), rec.duration)
            .map_err(|e| Error::parse(line, format!("hashtag `{}`: {e}", rec.tag)))?;
        let spec = HashtagSpec::from_seeds(rec.tag, &world.ids, seeds, size, rec.sample_rate)?;
        Ok(Hashtag {
            spec,
            empirical,
            topic: rec.topic,
            semantic_sparsity: rec.semantic_sparsity,
            semantic_growth: rec.semantic_growth,
            truth: rec.truth,
        })
    }
}

/// One JSON object per line; blank lines are skipped.
pub fn read_hashtags_jsonl<R: BufRead>(reader: R, world: &World) -> Result<Vec<Hashtag>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: HashtagJson =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, format!("bad hashtag record: {e}")))?;
        out.push(Hashtag::from_json(rec, world, i + 1)?);
    }
    let mut tags: Vec<&str> = out.iter().map(|h| h.spec.tag.as_str()).collect();
    tags.sort_unstable();
    if let Some(w) = tags.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("hashtag `{}` appears twice", w[0])));
    }
    Ok(out)
}

pub fn write_hashtags_jsonl<W: Write>(hashtags: &[Hashtag], world: &World, mut out: W) -> Result<()> {
    for h in hashtags {
        serde_json::to_writer(&mut out, &h.to_json(world))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
