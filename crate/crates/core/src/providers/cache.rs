//! Record/replay cache for provider outputs.
//!
//! The cache file holds one JSON record per line:
//! `{"kind", "input_hash", "input", "output"}`. In [`CacheMode::Record`]
//! misses go to the wrapped provider and are appended to the file; in
//! [`CacheMode::Replay`] a miss is an error. Failed calls are never cached.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{
    Entailment, EntityRecognizer, PosTagger, PredictedSpan, ProviderError, ProviderKind, ProviderResult, Similarity,
    SpanPredictor, TaggedToken,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    Record,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub kind: ProviderKind,
    pub input_hash: String,
    pub input: Value,
    pub output: Value,
}

#[derive(Debug)]
pub struct ProviderCache {
    path: PathBuf,
    mode: CacheMode,
    entries: RwLock<HashMap<(ProviderKind, String), Value>>,
    writer: Mutex<Option<File>>,
}

/// SHA-256 over the kind and the canonical (key-sorted) JSON of the input.
pub fn input_hash(kind: ProviderKind, input: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_str().as_bytes());
    hasher.update(b"\n");
    hasher.update(input.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

impl ProviderCache {
    /// Loads an existing cache file. A missing file is an empty cache in
    /// record mode and an error in replay mode.
    pub fn open(path: impl AsRef<Path>, mode: CacheMode) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        match File::open(&path) {
            Ok(file) => {
                for (n, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(|e| Error::io(&path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: CacheRecord = serde_json::from_str(&line).map_err(|e| Error::Schema {
                        path: path.display().to_string(),
                        line: n + 1,
                        message: e.to_string(),
                    })?;
                    entries.insert((record.kind, record.input_hash), record.output);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && mode == CacheMode::Record => {}
            Err(e) => return Err(Error::io(&path, e)),
        }
        Ok(Self {
            path,
            mode,
            entries: RwLock::new(entries),
            writer: Mutex::new(None),
        })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(
        &self,
        kind: ProviderKind,
        input: Value,
        compute: impl FnOnce() -> ProviderResult<Value>,
    ) -> ProviderResult<Value> {
        let hash = input_hash(kind, &input);
        let key = (kind, hash);
        if let Some(hit) = self.read_entry(&key) {
            return Ok(hit);
        }
        if self.mode == CacheMode::Replay {
            return Err(ProviderError::ReplayMiss {
                kind,
                input_hash: key.1,
            });
        }
        let output = compute()?;
        let record = CacheRecord {
            kind,
            input_hash: key.1.clone(),
            input,
            output: output.clone(),
        };
        let cache_err = |message: String| ProviderError::Cache { kind, message };
        {
            let mut entries = self.entries.write().map_err(|e| cache_err(e.to_string()))?;
            if let Some(existing) = entries.get(&key) {
                return Ok(existing.clone());
            }
            entries.insert(key, output.clone());
        }
        self.append(&record).map_err(|e| cache_err(e.to_string()))?;
        Ok(output)
    }

    fn read_entry(&self, key: &(ProviderKind, String)) -> Option<Value> {
        self.entries.read().ok()?.get(key).cloned()
    }

    fn append(&self, record: &CacheRecord) -> std::io::Result<()> {
        let mut guard = self.writer.lock().map_err(|e| std::io::Error::other(e.to_string()))?;
        if guard.is_none() {
            *guard = Some(OpenOptions::new().create(true).append(true).open(&self.path)?);
        }
        let file = guard.as_mut().expect("writer opened above");
        let line = serde_json::to_string(record)?;
        writeln!(file, "{line}")?;
        file.flush()
    }
}

/// Wraps a provider with a shared [`ProviderCache`].
pub struct Cached<P: ?Sized> {
    inner: Arc<P>,
    cache: Arc<ProviderCache>,
}

impl<P: ?Sized> Cached<P> {
    pub fn new(inner: Arc<P>, cache: Arc<ProviderCache>) -> Self {
        Self { inner, cache }
    }
}

fn decode<T: serde::de::DeserializeOwned>(kind: ProviderKind, value: Value) -> ProviderResult<T> {
    serde_json::from_value(value).map_err(|e| ProviderError::Cache {
        kind,
        message: format!("undecodable cached output: {e}"),
    })
}

fn encode<T: Serialize>(kind: ProviderKind, value: &T) -> ProviderResult<Value> {
    serde_json::to_value(value).map_err(|e| ProviderError::Cache {
        kind,
        message: e.to_string(),
    })
}

impl<P: SpanPredictor + ?Sized> SpanPredictor for Cached<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn predict_span(&self, query: &str, segment_text: &str) -> ProviderResult<Option<PredictedSpan>> {
        let kind = ProviderKind::SpanPredictor;
        let input = json!({ "query": query, "segment": segment_text });
        let out = self.cache.get_or_compute(kind, input, || {
            encode(kind, &self.inner.predict_span(query, segment_text)?)
        })?;
        decode(kind, out)
    }
}

impl<P: Similarity + ?Sized> Similarity for Cached<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn similarity(&self, a: &str, b: &str) -> ProviderResult<f64> {
        let kind = ProviderKind::Similarity;
        let input = json!({ "a": a, "b": b });
        let out = self
            .cache
            .get_or_compute(kind, input, || encode(kind, &self.inner.similarity(a, b)?))?;
        decode(kind, out)
    }
}

impl<P: EntityRecognizer + ?Sized> EntityRecognizer for Cached<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn recognize(&self, text: &str) -> ProviderResult<Vec<String>> {
        let kind = ProviderKind::EntityRecognizer;
        let input = json!({ "text": text });
        let out = self
            .cache
            .get_or_compute(kind, input, || encode(kind, &self.inner.recognize(text)?))?;
        decode(kind, out)
    }
}

impl<P: Entailment + ?Sized> Entailment for Cached<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> ProviderResult<f64> {
        let kind = ProviderKind::Entailment;
        let input = json!({ "premise": premise, "hypothesis": hypothesis });
        let out = self
            .cache
            .get_or_compute(kind, input, || encode(kind, &self.inner.entail(premise, hypothesis)?))?;
        decode(kind, out)
    }
}

impl<P: PosTagger + ?Sized> PosTagger for Cached<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn tag(&self, text: &str) -> ProviderResult<Vec<TaggedToken>> {
        let kind = ProviderKind::PosTagger;
        let input = json!({ "text": text });
        let out = self
            .cache
            .get_or_compute(kind, input, || encode(kind, &self.inner.tag(text)?))?;
        decode(kind, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::lexical::{LexicalSimilarity, LexicalSpanPredictor};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl Similarity for Counting {
        fn name(&self) -> &str {
            "counting"
        }
        fn similarity(&self, _a: &str, _b: &str) -> ProviderResult<f64> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(0.5)
        }
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");

        let cache = Arc::new(ProviderCache::open(&path, CacheMode::Record).unwrap());
        let inner = Arc::new(Counting(AtomicUsize::new(0)));
        let cached = Cached::new(inner.clone(), cache.clone());
        assert_eq!(cached.similarity("a b", "c").unwrap(), 0.5);
        assert_eq!(cached.similarity("a b", "c").unwrap(), 0.5);
        assert_eq!(inner.0.load(Ordering::SeqCst), 1);

        let span = Cached::new(Arc::new(LexicalSpanPredictor), cache.clone());
        let first = span.predict_span("how many islands", "Hawaii has 8 islands.").unwrap();

        let replay = Arc::new(ProviderCache::open(&path, CacheMode::Replay).unwrap());
        assert_eq!(replay.len(), 2);
        let cached = Cached::new(Arc::new(LexicalSimilarity), replay.clone());
        assert_eq!(cached.similarity("a b", "c").unwrap(), 0.5);
        let span = Cached::new(Arc::new(LexicalSpanPredictor), replay.clone());
        assert_eq!(
            span.predict_span("how many islands", "Hawaii has 8 islands.").unwrap(),
            first
        );

        let miss = cached.similarity("x", "y").unwrap_err();
        assert!(matches!(miss, ProviderError::ReplayMiss { .. }));
    }

    #[test]
    fn records_are_one_json_object_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = Arc::new(ProviderCache::open(&path, CacheMode::Record).unwrap());
        let cached = Cached::new(Arc::new(LexicalSimilarity), cache);
        cached.similarity("700 languages", "700 languages").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["kind"], "similarity");
        assert_eq!(v["output"], 1.0);
        assert_eq!(v["input"]["a"], "700 languages");
        assert_eq!(v["input_hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn errors_are_not_cached() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = Arc::new(ProviderCache::open(&path, CacheMode::Record).unwrap());
        let cached = Cached::new(Arc::new(LexicalSimilarity), cache.clone());
        assert!(cached.similarity("", "x").is_err());
        assert!(cache.is_empty());
    }

    #[test]
    fn replay_requires_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ProviderCache::open(dir.path().join("none.jsonl"), CacheMode::Replay).is_err());
    }
}
