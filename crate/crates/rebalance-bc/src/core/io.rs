//! Dataset file format: line-delimited JSON.
//!
//! The first line is a header `{"k":..,"state_dim":..,"action_dim":..}`;
//! every following line is one record
//! `{"state":[..],"action":[..],"group":..}`. Writes are deterministic, so
//! identical datasets serialize to byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::types::{LabeledDataset, StateActionPair};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    k: usize,
    state_dim: usize,
    action_dim: usize,
}

pub fn write_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = Header {
        k: dataset.group_count(),
        state_dim: dataset.state_dim(),
        action_dim: dataset.action_dim(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for pair in dataset.pairs() {
        serde_json::to_writer(&mut w, pair)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::MalformedFile("missing header line".into()))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| Error::MalformedFile(format!("bad header: {e}")))?;
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: StateActionPair = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedFile(format!("record {}: {e}", i + 1)))?;
        if pair.state.len() != header.state_dim {
            return Err(Error::MalformedFile(format!(
                "record {}: state has {} dims, header says {}",
                i + 1,
                pair.state.len(),
                header.state_dim
            )));
        }
        if pair.action.len() != header.action_dim {
            return Err(Error::MalformedFile(format!(
                "record {}: action has {} dims, header says {}",
                i + 1,
                pair.action.len(),
                header.action_dim
            )));
        }
        pairs.push(pair);
    }
    LabeledDataset::new(pairs, header.k)
}

/// Parses a plain-text `key = value` configuration file. Blank lines and
/// `#` comments are ignored; later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::MalformedFile(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}
