//! Synthetic worlds, planted cascades and the on-disk world layout.
//!
//! A world directory holds:
//!
//! | file | format |
//! |---|---|
//! | `network.tsv` | `src<TAB>dst<TAB>weight` |
//! | `node_map.tsv` | `id<TAB>index` |
//! | `schema.csv` | `category,register` |
//! | `identities.csv` | `node_id,<registers>` |
//! | `regions.csv` | `node_id,region` |
//! | `region_adjacency.csv` | `region_a,region_b,weight` |
//! | `world_manifest.json` | file list with SHA-256 content hashes |

mod hashtags;
mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use hashtags::{read_hashtags_jsonl, write_hashtags_jsonl, Hashtag};
pub use synth::{
    generate_world, plant_cascade, sample_seed_group, GeneratedWorld, PlantTruth, PlantedCascade, SynthWorldParams,
};

use crate::graph::{load_edge_list, load_node_map, write_edge_list, write_node_map, Network};
use crate::identity::{CategorySchema, IdentityMatrix};
use crate::metrics::RegionMap;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "world_manifest.json";
pub const WORLD_FORMAT_VERSION: u32 = 1;

const FILES: [&str; 6] = [
    "network.tsv",
    "node_map.tsv",
    "schema.csv",
    "identities.csv",
    "regions.csv",
    "region_adjacency.csv",
];

/// Network, identities and regions over one node set.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub net: Network,
    pub ids: IdentityMatrix,
    pub regions: RegionMap,
}

impl World {
    pub fn new(net: Network, ids: IdentityMatrix, regions: RegionMap) -> Result<Self> {
        ids.check_network(&net)?;
        regions.check_network(&net)?;
        Ok(World { net, ids, regions })
    }

    /// Serialized component files, keyed by file name.
    pub fn to_files(&self) -> Result<BTreeMap<&'static str, Vec<u8>>> {
        let mut files = BTreeMap::new();
        let mut buf = Vec::new();
        write_edge_list(&self.net, &mut buf)?;
        files.insert(FILES[0], std::mem::take(&mut buf));
        write_node_map(&self.net, &mut buf)?;
        files.insert(FILES[1], std::mem::take(&mut buf));
        self.ids.schema().write_csv(&mut buf)?;
        files.insert(FILES[2], std::mem::take(&mut buf));
        self.ids.write_csv(&self.net, &mut buf)?;
        files.insert(FILES[3], std::mem::take(&mut buf));
        let mut adj = Vec::new();
        self.regions.write_csv(&self.net, &mut buf, &mut adj)?;
        files.insert(FILES[4], buf);
        files.insert(FILES[5], adj);
        Ok(files)
    }

    /// Writes the component files and a manifest. `params` is recorded
    /// verbatim when given.
    pub fn save(&self, dir: &Path, params: Option<&SynthWorldParams>) -> Result<WorldManifest> {
        fs::create_dir_all(dir)?;
        let mut manifest = WorldManifest {
            format_version: WORLD_FORMAT_VERSION,
            nodes: self.net.node_count(),
            edges: self.net.edge_count(),
            files: BTreeMap::new(),
            params: params.cloned(),
        };
        for (name, bytes) in self.to_files()? {
            fs::write(dir.join(name), &bytes)?;
            manifest.files.insert(name.to_string(), sha256_hex(&bytes));
        }
        let mut f = fs::File::create(dir.join(MANIFEST_FILE))?;
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n")?;
        Ok(manifest)
    }

    /// Loads a world directory, checking every file against the manifest
    /// hash.
    pub fn load(dir: &Path) -> Result<(Self, WorldManifest)> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", manifest_path.display())))?;
        let manifest: WorldManifest = serde_json::from_str(&text)?;
        if manifest.format_version != WORLD_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "world format version {} is not supported",
                manifest.format_version
            )));
        }
        let mut contents = BTreeMap::new();
        for name in FILES {
            let path = dir.join(name);
            let bytes =
                fs::read(&path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
            let expected = manifest
                .files
                .get(name)
                .ok_or_else(|| Error::invalid(format!("manifest does not list {name}")))?;
            if &sha256_hex(&bytes) != expected {
                return Err(Error::invalid(format!("{} does not match its manifest hash", path.display())));
            }
            contents.insert(name, bytes);
        }
        let ids_order = load_node_map(BufReader::new(contents[FILES[1]].as_slice()))?;
        let net = load_edge_list(BufReader::new(contents[FILES[0]].as_slice()), Some(ids_order), false)?;
        let schema = CategorySchema::read_csv(contents[FILES[2]].as_slice())?;
        let ids = IdentityMatrix::read_csv(contents[FILES[3]].as_slice(), schema, &net)?;
        let regions = RegionMap::read_csv(contents[FILES[4]].as_slice(), contents[FILES[5]].as_slice(), &net)?;
        Ok((World::new(net, ids, regions)?, manifest))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldManifest {
    pub format_version: u32,
    pub nodes: usize,
    pub edges: usize,
    /// File name to lowercase hex SHA-256.
    pub files: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SynthWorldParams>,
}

impl WorldManifest {
    /// One hash over all component hashes, identifying the world.
    pub fn world_hash(&self) -> String {
        let mut h = Sha256::new();
        for (name, hash) in &self.files {
            h.update(name.as_bytes());
            h.update(b"\0");
            h.update(hash.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
