//! Documents paired with a max-composable scorer over per-unit base scores.

use std::sync::Arc;

use longfact_core::scorer::backends::MaxComposableBackend;
use longfact_core::{Document, Scorer, ScorerConfig, WhitespaceCounter};
use rand::Rng;

/// Unit `i` is `"u{i}"` followed by `sizes[i] - 1` filler words.
pub fn mock_document(base: &[f64], sizes: &[usize], config: ScorerConfig) -> (Document, Scorer) {
    assert_eq!(base.len(), sizes.len());
    let units: Vec<(Option<String>, String)> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut words = vec![format!("u{i}")];
            words.extend(std::iter::repeat_n("w".to_owned(), n.saturating_sub(1)));
            (None, words.join(" "))
        })
        .collect();
    let backend = MaxComposableBackend::new(units.iter().map(|(_, t)| t.clone()).zip(base.iter().copied()));
    let doc = Document::new("mock", units, &WhitespaceCounter).unwrap();
    let scorer = Scorer::new(Arc::new(backend), Arc::new(WhitespaceCounter), config);
    (doc, scorer)
}

/// Base scores on a coarse grid so that ties are common.
pub fn random_base(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..=20) as f64 / 20.0).collect()
}

pub fn random_sizes(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                rng.random_range(20..200)
            } else {
                rng.random_range(1..20)
            }
        })
        .collect()
}
