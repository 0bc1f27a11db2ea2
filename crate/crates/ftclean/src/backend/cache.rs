use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use ftclean_core::{EmbeddingVector, Expert, Prediction};
use serde::{Deserialize, Serialize};

use super::{embedding_fingerprint, request_fingerprint, Backend, BackendError, CompletionRequest};

#[derive(Serialize, Deserialize)]
struct StoredEmbedding {
    fingerprint: String,
    vector: EmbeddingVector,
}

/// On-disk response cache: one JSON file per fingerprint under
/// `<dir>/completions` and `<dir>/embeddings`. Unreadable or mismatched
/// entries are recomputed and rewritten.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<B: Backend> CachedBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let dir = dir.into();
        for sub in ["completions", "embeddings"] {
            fs::create_dir_all(dir.join(sub)).map_err(|e| {
                BackendError::Precondition(format!("cache dir {} not writable: {e}", dir.display()))
            })?;
        }
        Ok(CachedBackend {
            inner,
            dir,
            locks: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn completion_path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join("completions").join(format!("{fingerprint}.json"))
    }

    pub fn embedding_path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join("embeddings").join(format!("{fingerprint}.json"))
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table");
        locks.entry(key.to_string()).or_default().clone()
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) {
        let result = (|| -> std::io::Result<()> {
            let parent = path.parent().expect("cache path has a parent");
            let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_data()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        })();
        if let Err(e) = result {
            log::warn!("cache write failed for {}: {e}", path.display());
        }
    }

    fn lookup<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Option<T> {
        let bytes = fs::read(path).ok()?;
        match serde_json::from_slice(&bytes) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("discarding corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn model_id(&self, expert: Expert) -> String {
        self.inner.model_id(expert)
    }

    fn embedding_model_id(&self) -> String {
        self.inner.embedding_model_id()
    }

    fn supports_logprobs(&self) -> bool {
        self.inner.supports_logprobs()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError> {
        let fp = request_fingerprint(req, &self.inner.model_id(req.expert));
        let path = self.completion_path(&fp);
        let lock = self.key_lock(&fp);
        let _guard = lock.lock().expect("key lock");
        if let Some(p) = self.lookup::<Prediction>(&path) {
            if p.request_fingerprint == fp && p.expert == req.expert {
                self.hits.fetch_add(1, Ordering::SeqCst);
                return Ok(p);
            }
            log::warn!("cache entry {} does not match its key; recomputing", path.display());
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let mut p = self.inner.complete(req)?;
        p.request_fingerprint = fp;
        let bytes = serde_json::to_vec(&p).expect("prediction serializes");
        self.write_atomic(&path, &bytes);
        Ok(p)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        let fp = embedding_fingerprint(text, &self.inner.embedding_model_id());
        let path = self.embedding_path(&fp);
        let lock = self.key_lock(&fp);
        let _guard = lock.lock().expect("key lock");
        if let Some(stored) = self.lookup::<StoredEmbedding>(&path) {
            if stored.fingerprint == fp {
                self.hits.fetch_add(1, Ordering::SeqCst);
                return Ok(stored.vector);
            }
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let vector = self.inner.embed(text)?;
        let stored = StoredEmbedding { fingerprint: fp, vector };
        let bytes = serde_json::to_vec(&stored).expect("embedding serializes");
        self.write_atomic(&path, &bytes);
        Ok(stored.vector)
    }
}
