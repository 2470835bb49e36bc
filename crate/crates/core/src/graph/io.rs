use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use super::Network;
use crate::{Error, Result};

/// Parse a `src<TAB>dst<TAB>weight` edge list.
///
/// Blank lines and lines starting with `#` are skipped; fields may be
/// separated by any run of whitespace. Node ids are assigned dense indices in
/// order of first appearance unless `node_ids` fixes the order (as read from a
/// `node_map.tsv` sidecar). With `symmetrize`, a missing reverse edge is
/// added with the forward weight; otherwise it is an error.
pub fn load_edge_list<R: BufRead>(
    reader: R,
    node_ids: Option<Vec<String>>,
    symmetrize: bool,
) -> Result<Network> {
    let fixed = node_ids.is_some();
    let mut ids = node_ids.unwrap_or_default();
    let mut index: HashMap<String, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected `src dst weight`, found {} fields", fields.len()),
            ));
        }
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad weight `{}`", fields[2])))?;
        if fields[0] == fields[1] {
            return Err(Error::parse(lineno, format!("self-loop on `{}`", fields[0])));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::parse(lineno, format!("nonpositive weight {weight}")));
        }
        let mut lookup = |id: &str| -> Result<usize> {
            if let Some(&i) = index.get(id) {
                return Ok(i);
            }
            if fixed {
                return Err(Error::parse(lineno, format!("node `{id}` missing from node map")));
            }
            ids.push(id.to_string());
            index.insert(id.to_string(), ids.len() - 1);
            Ok(ids.len() - 1)
        };
        let s = lookup(fields[0])?;
        let d = lookup(fields[1])?;
        if !seen.insert((s, d)) {
            return Err(Error::parse(
                lineno,
                format!("duplicate edge `{}` -> `{}`", fields[0], fields[1]),
            ));
        }
        edges.push((s, d, weight));
    }

    if symmetrize {
        let missing: Vec<_> = edges
            .iter()
            .filter(|&&(s, d, _)| !seen.contains(&(d, s)))
            .map(|&(s, d, w)| (d, s, w))
            .collect();
        edges.extend(missing);
    }
    Network::from_edges(ids, edges)
}

/// Read a `node_map.tsv` (`id<TAB>index`) into an index-ordered id list.
pub fn load_node_map<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut entries = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, idx) = trimmed
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(lineno + 1, "expected `id<TAB>index`"))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno + 1, format!("bad index `{idx}`")))?;
        entries.push((idx, id.to_string()));
    }
    entries.sort();
    for (expect, (idx, id)) in entries.iter().enumerate() {
        if *idx != expect {
            return Err(Error::invalid(format!(
                "node map is not dense: `{id}` has index {idx}, expected {expect}"
            )));
        }
    }
    Ok(entries.into_iter().map(|(_, id)| id).collect())
}

pub fn write_edge_list<W: Write>(net: &Network, mut out: W) -> Result<()> {
    writeln!(out, "# src\tdst\tweight")?;
    for (s, d, w) in net.edges() {
        writeln!(out, "{}\t{}\t{}", net.id(s), net.id(d), w)?;
    }
    Ok(())
}

pub fn write_node_map<W: Write>(net: &Network, mut out: W) -> Result<()> {
    for (i, id) in net.ids().iter().enumerate() {
        writeln!(out, "{id}\t{i}")?;
    }
    Ok(())
}
