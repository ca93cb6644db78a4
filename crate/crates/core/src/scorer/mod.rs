//! Entailment scoring: the prompt, the logit-to-probability conversion, the
//! backend contract and a caching, concurrency-bounded front end.

pub mod backends;
mod prompt;
pub mod remote;

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use lru::LruCache;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use prompt::{build_prompt, entail_prob};

use crate::chunker::UnitRange;
use crate::corpus::TokenCounter;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("transport failure talking to {endpoint} after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("protocol error from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("backend failed: {0}")]
    Other(String),
}

impl BackendError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Transport { .. })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoreError {
    #[error("empty {0}")]
    EmptyInput(&'static str),
    #[error("non-finite logits ({logit_yes}, {logit_no})")]
    NonFinite { logit_yes: f64, logit_no: f64 },
    #[error("backend returned probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("premise has {tokens} tokens, backend accepts at most {limit}")]
    PremiseTooLong { tokens: usize, limit: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// What a backend sees for one premise/hypothesis pair.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
    /// The premise and hypothesis already formatted by [`build_prompt`].
    pub prompt: &'a str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackendOutput {
    /// Raw logits of the "Yes" and "No" answer tokens.
    Logits { yes: f64, no: f64 },
    /// A probability the backend computed itself.
    Probability(f64),
}

impl BackendOutput {
    pub fn probability(self) -> Result<f64, ScoreError> {
        match self {
            Self::Logits { yes, no } => entail_prob(yes, no),
            Self::Probability(p) if (0.0..=1.0).contains(&p) => Ok(p),
            Self::Probability(p) => Err(ScoreError::ProbabilityOutOfRange(p)),
        }
    }
}

/// An entailment model `M(premise, hypothesis)`.
///
/// Implementations must be deterministic for identical inputs and safe to
/// call from several threads at once.
pub trait ScorerBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Largest premise, in tokens, the backend accepts.
    fn max_premise_tokens(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, request: &ScoreRequest<'_>) -> Result<BackendOutput, BackendError>;
}

/// Which part of which document a score was computed against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRef {
    pub doc_id: String,
    pub unit_range: UnitRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentScore {
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_ref: Option<ChunkRef>,
    pub backend: String,
}

impl EntailmentScore {
    pub fn with_chunk(mut self, doc_id: &str, unit_range: UnitRange) -> Self {
        self.chunk_ref = Some(ChunkRef {
            doc_id: doc_id.to_string(),
            unit_range,
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    /// LRU entries; 0 disables caching.
    pub cache_capacity: usize,
    /// Maximum backend requests in flight during a batch.
    pub concurrency: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            cache_capacity: 4096,
            concurrency: 4,
        }
    }
}

type CacheKey = (String, [u8; 32], [u8; 32]);

fn digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

/// Front end over a backend: validates premises, converts outputs to
/// probabilities, caches results and fans batches out over a bounded
/// number of threads.
pub struct Scorer {
    backend: Arc<dyn ScorerBackend>,
    counter: Arc<dyn TokenCounter>,
    cache: Option<Mutex<LruCache<CacheKey, f64>>>,
    concurrency: usize,
    backend_calls: AtomicU64,
}

impl Scorer {
    pub fn new(backend: Arc<dyn ScorerBackend>, counter: Arc<dyn TokenCounter>, config: ScorerConfig) -> Self {
        Self {
            backend,
            counter,
            cache: NonZeroUsize::new(config.cache_capacity).map(|c| Mutex::new(LruCache::new(c))),
            concurrency: config.concurrency.max(1),
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn counter(&self) -> &dyn TokenCounter {
        self.counter.as_ref()
    }

    pub fn premise_limit(&self) -> Option<usize> {
        self.backend.max_premise_tokens()
    }

    /// Requests that actually reached the backend (cache hits excluded).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    fn key(&self, premise: &str, hypothesis: &str) -> CacheKey {
        (self.backend.name().to_string(), digest(premise), digest(hypothesis))
    }

    fn cached(&self, key: &CacheKey) -> Option<f64> {
        self.cache.as_ref()?.lock().get(key).copied()
    }

    fn store(&self, key: CacheKey, p: f64) {
        if let Some(c) = &self.cache {
            c.lock().put(key, p);
        }
    }

    fn make_score(&self, probability: f64) -> EntailmentScore {
        EntailmentScore {
            probability,
            chunk_ref: None,
            backend: self.backend.name().to_string(),
        }
    }

    fn evaluate_uncached(&self, premise: &str, hypothesis: &str) -> Result<f64, ScoreError> {
        let prompt = build_prompt(premise, hypothesis)?;
        if let Some(limit) = self.backend.max_premise_tokens() {
            let tokens = self.counter.count(premise);
            if tokens > limit {
                return Err(ScoreError::PremiseTooLong { tokens, limit });
            }
        }
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        let out = self.backend.evaluate(&ScoreRequest {
            premise,
            hypothesis,
            prompt: &prompt,
        })?;
        out.probability()
    }

    /// Scores one premise/hypothesis pair.
    pub fn score_pair(&self, premise: &str, hypothesis: &str) -> Result<EntailmentScore, ScoreError> {
        let key = self.cache.as_ref().map(|_| self.key(premise, hypothesis));
        if let Some(p) = key.as_ref().and_then(|k| self.cached(k)) {
            return Ok(self.make_score(p));
        }
        let p = self.evaluate_uncached(premise, hypothesis)?;
        if let Some(k) = key {
            self.store(k, p);
        }
        Ok(self.make_score(p))
    }

    /// Scores every pair, preserving order. Failures are reported per item;
    /// one failing pair does not stop the others.
    pub fn score_batch<P, H>(&self, pairs: &[(P, H)]) -> Vec<Result<EntailmentScore, ScoreError>>
    where
        P: AsRef<str> + Sync,
        H: AsRef<str> + Sync,
    {
        if pairs.is_empty() {
            return Vec::new();
        }
        // Duplicates share one slot so each distinct pair reaches the backend once.
        let mut slot_of: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut reps: Vec<usize> = Vec::new();
        let mut results: Vec<Option<Result<f64, ScoreError>>> = Vec::new();
        if self.cache.is_some() {
            let mut seen: HashMap<CacheKey, usize> = HashMap::new();
            for (i, (p, h)) in pairs.iter().enumerate() {
                let slot = match seen.entry(self.key(p.as_ref(), h.as_ref())) {
                    Entry::Occupied(e) => *e.get(),
                    Entry::Vacant(e) => {
                        results.push(self.cached(e.key()).map(Ok));
                        reps.push(i);
                        *e.insert(reps.len() - 1)
                    }
                };
                slot_of.push(slot);
            }
        } else {
            slot_of.extend(0..pairs.len());
            reps.extend(0..pairs.len());
            results.resize_with(pairs.len(), || None);
        }
        let work: Vec<usize> = (0..results.len()).filter(|&s| results[s].is_none()).collect();
        let computed = self.run_parallel(&work, |slot| {
            let (p, h) = &pairs[reps[slot]];
            self.evaluate_uncached(p.as_ref(), h.as_ref())
        });
        for (&slot, r) in work.iter().zip(computed) {
            if let Ok(p) = r {
                let (pp, hh) = &pairs[reps[slot]];
                self.store(self.key(pp.as_ref(), hh.as_ref()), p);
            }
            results[slot] = Some(r);
        }
        slot_of
            .into_iter()
            .map(|s| {
                results[s]
                    .clone()
                    .expect("every slot is filled")
                    .map(|p| self.make_score(p))
            })
            .collect()
    }

    /// Runs `f` over `items` on up to `concurrency` threads; output order
    /// matches `items`.
    fn run_parallel<T, F>(&self, items: &[usize], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.concurrency.min(items.len());
        if workers <= 1 {
            return items.iter().map(|&i| f(i)).collect();
        }
        let next = AtomicUsize::new(0);
        let out: Vec<Mutex<Option<T>>> = items.iter().map(|_| Mutex::new(None)).collect();
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let j = next.fetch_add(1, Ordering::Relaxed);
                    if j >= items.len() {
                        break;
                    }
                    *out[j].lock() = Some(f(items[j]));
                });
            }
        });
        out.into_iter()
            .map(|m| m.into_inner().expect("worker filled slot"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::backends::{FnBackend, LexicalOverlapBackend};
    use super::*;
    use crate::corpus::WhitespaceCounter;

    fn scorer(backend: impl ScorerBackend + 'static, cache_capacity: usize) -> Scorer {
        Scorer::new(
            Arc::new(backend),
            Arc::new(WhitespaceCounter),
            ScorerConfig {
                cache_capacity,
                concurrency: 4,
            },
        )
    }

    #[test]
    fn overlap_pairs() {
        let s = scorer(LexicalOverlapBackend, 0);
        assert_eq!(s.score_pair("a b c d", "b c").unwrap().probability, 1.0);
        assert_eq!(s.score_pair("a b", "x y").unwrap().probability, 0.0);
        assert_eq!(s.score_pair("a b", "x y").unwrap().backend, "overlap");
    }

    #[test]
    fn logits_go_through_softmax() {
        let s = scorer(
            FnBackend::new("fixed", |_| Ok(BackendOutput::Logits { yes: 2.0, no: 0.0 })),
            0,
        );
        let p = s.score_pair("p", "h").unwrap().probability;
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-15);
    }

    #[test]
    fn backend_sees_formatted_prompt() {
        let s = scorer(
            FnBackend::new("echo", |r| {
                assert_eq!(r.prompt, "P. Question: does this imply 'H.'? Yes or no?");
                Ok(BackendOutput::Probability(0.3))
            }),
            0,
        );
        assert_eq!(s.score_pair("P.", "H.").unwrap().probability, 0.3);
    }

    #[test]
    fn out_of_range_probability_rejected() {
        let s = scorer(FnBackend::new("bad", |_| Ok(BackendOutput::Probability(1.5))), 0);
        assert_eq!(s.score_pair("p", "h"), Err(ScoreError::ProbabilityOutOfRange(1.5)));
    }

    #[test]
    fn premise_over_budget_is_an_error() {
        let s = scorer(
            FnBackend::new("small", |_| Ok(BackendOutput::Probability(1.0))).with_max_premise_tokens(2),
            0,
        );
        assert_eq!(
            s.score_pair("one two three", "h"),
            Err(ScoreError::PremiseTooLong { tokens: 3, limit: 2 })
        );
        assert_eq!(s.backend_calls(), 0);
        assert!(s.score_pair("one two", "h").is_ok());
    }

    #[test]
    fn empty_batch() {
        let s = scorer(LexicalOverlapBackend, 16);
        let pairs: Vec<(&str, &str)> = Vec::new();
        assert!(s.score_batch(&pairs).is_empty());
    }

    #[test]
    fn duplicate_pairs_hit_backend_once() {
        let s = scorer(LexicalOverlapBackend, 16);
        let pairs = vec![("a b", "a"); 3];
        let out = s.score_batch(&pairs);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|r| r.as_ref().unwrap().probability == 1.0));
        assert_eq!(s.backend_calls(), 1);
        s.score_pair("a b", "a").unwrap();
        assert_eq!(s.backend_calls(), 1);
    }

    #[test]
    fn batch_errors_are_per_item() {
        let s = scorer(
            FnBackend::new("flaky", |r| {
                if r.premise == "bad" {
                    Err(BackendError::Other("boom".into()))
                } else {
                    Ok(BackendOutput::Probability(0.25))
                }
            }),
            0,
        );
        let out = s.score_batch(&[("ok", "h"), ("bad", "h"), ("fine", "h")]);
        assert_eq!(out[0].as_ref().unwrap().probability, 0.25);
        assert!(matches!(out[1], Err(ScoreError::Backend(BackendError::Other(_)))));
        assert_eq!(out[2].as_ref().unwrap().probability, 0.25);
    }
}
