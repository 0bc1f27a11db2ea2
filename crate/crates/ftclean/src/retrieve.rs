//! Building the clean-set embedding index and persisting it as a sidecar.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ftclean_core::{Dataset, EmbeddingIndex, EmbeddingVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stage::{absorb, StageContext};

const INDEX_FORMAT: &str = "ftclean-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Header {
    format: String,
    version: u32,
    model: String,
    key: String,
    dimension: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    id: String,
    vector: EmbeddingVector,
}

/// Identifies the (model, ids, queries) an index was built from.
pub fn index_key(clean: &Dataset, model: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    for s in clean {
        h.update([0]);
        h.update(s.id.as_bytes());
        h.update([0]);
        h.update(s.query.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Embed every clean query. Samples whose embedding fails are left out.
pub fn build_index(ctx: &StageContext, clean: &Dataset) -> Result<EmbeddingIndex> {
    if clean.is_empty() {
        return Err(Error::Precondition("cannot build an index over an empty clean set".into()));
    }
    let vectors = ctx.run("retrieve", clean.samples(), |s| absorb(ctx.backend.embed(&s.query)))?;
    let mut index: Option<EmbeddingIndex> = None;
    for (sample, vector) in clean.iter().zip(vectors) {
        match vector {
            Ok(v) => {
                let idx = index.get_or_insert_with(|| EmbeddingIndex::new(v.dimension()));
                if let Err(e) = idx.insert(sample.id.clone(), v) {
                    log::warn!("retrieve: sample {} left out of the index: {e}", sample.id);
                }
            }
            Err(e) => log::warn!("retrieve: sample {} left out of the index: {e}", sample.id),
        }
    }
    Ok(index.unwrap_or_else(|| EmbeddingIndex::new(1)))
}

pub fn save_index(index: &EmbeddingIndex, key: &str, model: &str, path: &Path) -> Result<()> {
    let header = Header {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        model: model.into(),
        key: key.into(),
        dimension: index.dimension(),
        count: index.len(),
    };
    let parent = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        write_line(&mut out, &header).map_err(|e| Error::io(path, e))?;
        for (id, vector) in index.entries() {
            write_line(&mut out, &Entry { id: id.clone(), vector: vector.clone() })
                .map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_line(out: &mut impl Write, value: &impl Serialize) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

/// Load a sidecar if it exists and matches `key` and `model`.
pub fn load_index(path: &Path, key: &str, model: &str) -> Option<EmbeddingIndex> {
    let file = File::open(path).ok()?;
    let mut lines = BufReader::new(file).lines();
    let header: Header = serde_json::from_str(&lines.next()?.ok()?).ok()?;
    if header.format != INDEX_FORMAT
        || header.version != INDEX_VERSION
        || header.key != key
        || header.model != model
    {
        return None;
    }
    let mut index = EmbeddingIndex::new(header.dimension);
    for line in lines {
        let entry: Entry = serde_json::from_str(&line.ok()?).ok()?;
        index.insert(entry.id, entry.vector).ok()?;
    }
    (index.len() == header.count).then_some(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Backend, Knowledge, SimSettings, SimulatedBackend};
    use crate::prompts::PromptSet;
    use ftclean_core::{Sample, TaskKind};

    fn setup() -> (SimulatedBackend, PromptSet) {
        (
            SimulatedBackend::new(SimSettings::default(), Knowledge::empty(TaskKind::FreeText)),
            PromptSet::default(),
        )
    }

    fn ctx<'a>(b: &'a SimulatedBackend, p: &'a PromptSet) -> StageContext<'a> {
        StageContext {
            backend: b,
            prompts: p,
            kind: TaskKind::FreeText,
            concurrency: 4,
            answer_max_tokens: 64,
            reasoning_max_tokens: 64,
        }
    }

    fn clean(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample::new(format!("c{i:02}"), format!("query number {}", i % 7), "x"))
            .collect();
        Dataset::new(TaskKind::FreeText, samples).unwrap()
    }

    #[test]
    fn one_entry_per_sample() {
        let (b, p) = setup();
        let index = build_index(&ctx(&b, &p), &clean(10)).unwrap();
        assert_eq!(index.len(), 10);
        assert_eq!(index.dimension(), 64);
        let e = index.entries();
        assert_eq!(e[0].1, e[7].1);
        assert_ne!(e[0].0, e[7].0);
    }

    #[test]
    fn empty_clean_set_is_rejected() {
        let (b, p) = setup();
        assert!(build_index(&ctx(&b, &p), &Dataset::empty(TaskKind::FreeText)).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let (b, p) = setup();
        let ds = clean(12);
        let index = build_index(&ctx(&b, &p), &ds).unwrap();
        let model = b.embedding_model_id();
        let key = index_key(&ds, &model);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx").join("a.jsonl");
        save_index(&index, &key, &model, &path).unwrap();
        let loaded = load_index(&path, &key, &model).unwrap();
        assert_eq!(loaded.entries(), index.entries());
        assert!(load_index(&path, "other", &model).is_none());
        assert!(load_index(&path, &key, "other-model").is_none());
    }
}
