//! Seeded synthetic workloads shared by the benchmarks.

use std::sync::Arc;

use longfact_core::scorer::backends::MaxComposableBackend;
use longfact_core::{Claim, Document, Scorer, ScorerConfig, WhitespaceCounter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Document of `n` units with mostly short and occasionally long units.
pub fn document(n: usize, seed: u64) -> Document {
    let mut r = rng(seed);
    let units = (0..n)
        .map(|i| {
            let len = if r.random_bool(0.1) {
                r.random_range(40..200)
            } else {
                r.random_range(4..30)
            };
            let mut words = vec![format!("u{i}")];
            words.extend((1..len).map(|_| format!("w{}", r.random_range(0..500))));
            (None, words.join(" "))
        })
        .collect();
    Document::new("bench", units, &WhitespaceCounter).expect("non-empty document")
}

/// Scorer whose score on a premise is the max of per-unit base scores.
pub fn max_scorer(doc: &Document, seed: u64, config: ScorerConfig) -> Scorer {
    let mut r = rng(seed);
    let base = doc.units().iter().map(|u| (u.text.clone(), r.random::<f64>()));
    Scorer::new(
        Arc::new(MaxComposableBackend::new(base)),
        Arc::new(WhitespaceCounter),
        config,
    )
}

pub fn claim() -> Claim {
    Claim::new("bench", "bench", "claim")
}

/// Probabilities with labels drawn so that the scores are calibrated.
pub fn calibrated(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let probs: Vec<f64> = (0..n).map(|_| r.random()).collect();
    let labels = probs.iter().map(|&p| r.random_bool(p)).collect();
    (probs, labels)
}
