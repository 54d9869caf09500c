use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::protocol::{ProtocolError, ProviderError};
use crate::ingest::Corpus;
use crate::model::{BinaryMarket, MarketId};

/// Dense embedding tagged with the provider that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub provider: String,
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(provider: impl Into<String>, values: Vec<f32>) -> Result<Self, String> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite entry at index {i}"));
        }
        Ok(EmbeddingVector {
            provider: provider.into(),
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

pub trait EmbeddingProvider {
    /// Identifies the model; part of every cache key.
    fn tag(&self) -> &str;
    fn dimension(&self) -> usize;
    fn max_batch(&self) -> usize {
        64
    }
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;
}

/// Signed feature hashing of word unigrams and bigrams, L2-normalised.
/// Pure function of the text, so stable across processes and platforms.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
    tag: String,
}

impl HashEmbedder {
    pub const DEFAULT_DIMENSION: usize = 64;

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashEmbedder {
            dimension,
            tag: format!("hash-bow-{dimension}"),
        }
    }

    fn embed_one(&self, text: &str) -> Vec<f32> {
        let lowered = text.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
            .collect();
        let mut v = vec![0f64; self.dimension];
        let mut add = |feature: &str, weight: f64| {
            let digest = Sha256::digest(feature.as_bytes());
            let h = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
            let index = (h % self.dimension as u64) as usize;
            let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
            v[index] += sign * weight;
        };
        for t in &tokens {
            add(t, 1.0);
        }
        for pair in tokens.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]), 0.5);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v.into_iter().map(|x| x as f32).collect()
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(Self::DEFAULT_DIMENSION)
    }
}

const STOPWORDS: [&str; 24] = [
    "a", "an", "the", "will", "be", "is", "it", "of", "in", "on", "by", "to", "at", "for", "and", "or", "this",
    "that", "market", "resolves", "yes", "no", "if", "before",
];

impl EmbeddingProvider for HashEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// `title \n description \n yes | no \n key=value; ...` with metadata keys sorted.
pub fn canonical_text(m: &BinaryMarket) -> String {
    let meta: Vec<String> = m.resolution_meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(
        "{}\n{}\n{} | {}\n{}",
        m.title,
        m.description,
        m.outcome_labels.0,
        m.outcome_labels.1,
        meta.join("; ")
    )
}

pub fn content_hash(provider: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(provider.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// One file per vector, named by content hash. Writes go through a temp file
/// and a rename, so concurrent readers never see partial entries.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(EmbeddingCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<EmbeddingVector> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, vector: &EmbeddingVector) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, vector)?;
        tmp.flush()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

/// Bounded retries with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    pub fn run<T, E>(&self, mut call: impl FnMut() -> Result<T, E>) -> Result<T, E> {
        let mut attempt = 0;
        loop {
            match call() {
                Ok(v) => return Ok(v),
                Err(e) => {
                    attempt += 1;
                    if attempt >= self.max_attempts.max(1) {
                        return Err(e);
                    }
                    std::thread::sleep(self.base_delay * 2u32.saturating_pow(attempt - 1));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddedCorpus {
    pub vectors: BTreeMap<MarketId, EmbeddingVector>,
    /// Markets whose batch kept failing or came back malformed.
    pub errors: BTreeMap<MarketId, String>,
    pub cache_hits: usize,
    pub provider_calls: usize,
}

/// Embeds every market's canonical text, reusing cached vectors and sending
/// misses to the provider in batches.
pub fn embed_corpus(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    cache: Option<&EmbeddingCache>,
    retry: RetryPolicy,
) -> EmbeddedCorpus {
    let mut out = EmbeddedCorpus::default();
    let mut misses: Vec<(MarketId, String, String)> = Vec::new();
    let mut pending: BTreeMap<String, Vec<MarketId>> = BTreeMap::new();
    for m in corpus.iter() {
        let text = canonical_text(m);
        let key = content_hash(provider.tag(), &text);
        let cached = cache
            .and_then(|c| c.get(&key))
            .filter(|v| v.provider == provider.tag() && v.dimension() == provider.dimension());
        if let Some(v) = cached {
            out.cache_hits += 1;
            out.vectors.insert(m.id.clone(), v);
            continue;
        }
        // Identical texts share one provider call.
        let waiting = pending.entry(key.clone()).or_default();
        if waiting.is_empty() {
            misses.push((m.id.clone(), key, text));
        } else {
            out.cache_hits += 1;
        }
        waiting.push(m.id.clone());
    }

    for chunk in misses.chunks(provider.max_batch().max(1)) {
        let texts: Vec<String> = chunk.iter().map(|(_, _, t)| t.clone()).collect();
        out.provider_calls += 1;
        let result = retry
            .run(|| provider.embed_batch(&texts))
            .map_err(|e| e.to_string())
            .and_then(|batch| check_batch(provider, &texts, batch).map_err(|e| e.to_string()));
        match result {
            Ok(vectors) => {
                for ((_, key, _), vector) in chunk.iter().zip(vectors) {
                    if let Some(cache) = cache {
                        // A failed cache write only costs a recomputation later.
                        let _ = cache.put(key, &vector);
                    }
                    for id in &pending[key] {
                        out.vectors.insert(id.clone(), vector.clone());
                    }
                }
            }
            Err(message) => {
                for (_, key, _) in chunk {
                    for id in &pending[key] {
                        out.errors.insert(id.clone(), message.clone());
                    }
                }
            }
        }
    }
    out
}

fn check_batch(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
    batch: Vec<Vec<f32>>,
) -> Result<Vec<EmbeddingVector>, ProtocolError> {
    if batch.len() != texts.len() {
        return Err(ProtocolError::new(
            format!("{} vectors for {} texts", batch.len(), texts.len()),
            "",
        ));
    }
    batch
        .into_iter()
        .map(|values| {
            if values.len() != provider.dimension() {
                return Err(ProtocolError::new(
                    format!("dimension {} where {} was declared", values.len(), provider.dimension()),
                    "",
                ));
            }
            EmbeddingVector::new(provider.tag(), values).map_err(|e| ProtocolError::new(e, ""))
        })
        .collect()
}
