//! Line-delimited JSON dataset files.
//!
//! One object per line with `query` and `label` (required) plus optional
//! `id`, `ground_truth` and `tags`. Other fields pass through untouched.
//! Records without an id are numbered `s<zero-padded line index>`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ftclean_core::{Dataset, Sample, Tag, TaskKind};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct Record {
    id: Option<String>,
    query: String,
    label: String,
    ground_truth: Option<String>,
    tags: Option<BTreeSet<Tag>>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// Width of auto-assigned ids.
const ID_WIDTH: usize = 6;

pub fn load_dataset(path: &Path, task_kind: TaskKind) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file), task_kind, path)
}

pub fn parse_dataset(reader: impl BufRead, task_kind: TaskKind, path: &Path) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    let record_error = |line: usize, message: String| Error::Record {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(&line).map_err(|e| record_error(lineno, e.to_string()))?;
        let id = rec.id.unwrap_or_else(|| format!("s{:0ID_WIDTH$}", samples.len()));
        if !seen.insert(id.clone()) {
            return Err(record_error(lineno, format!("duplicate id `{id}`")));
        }
        let sample = Sample {
            id,
            query: rec.query,
            label: rec.label,
            ground_truth: rec.ground_truth,
            tags: rec.tags.unwrap_or_else(|| [Tag::Original].into_iter().collect()),
            extra: rec.extra,
        };
        sample.validate().map_err(|e| record_error(lineno, e.to_string()))?;
        samples.push(sample);
    }
    Ok(Dataset::new(task_kind, samples)?)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_jsonl(path, ds.iter())
}

/// Write one JSON object per line.
pub fn write_jsonl<T: serde::Serialize>(
    path: &Path,
    items: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, &item)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read one JSON object per line, skipping blank lines.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(items)
}
