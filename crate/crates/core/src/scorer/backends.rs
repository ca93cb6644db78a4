//! In-process backends: deterministic oracles for tests, fixtures and dry runs.

use std::collections::{BTreeSet, HashMap};

use super::{BackendError, BackendOutput, ScoreRequest, ScorerBackend};
use crate::corpus::UNIT_SEPARATOR;

fn words(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Fraction of hypothesis words that also occur in the premise.
///
/// Words are lowercased with surrounding punctuation stripped. Not a model
/// of entailment; a transparent, deterministic stand-in for one.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalOverlapBackend;

impl LexicalOverlapBackend {
    pub fn overlap(premise: &str, hypothesis: &str) -> f64 {
        let h = words(hypothesis);
        if h.is_empty() {
            return 0.0;
        }
        let p = words(premise);
        h.intersection(&p).count() as f64 / h.len() as f64
    }
}

impl ScorerBackend for LexicalOverlapBackend {
    fn name(&self) -> &str {
        "overlap"
    }

    fn evaluate(&self, request: &ScoreRequest<'_>) -> Result<BackendOutput, BackendError> {
        Ok(BackendOutput::Probability(Self::overlap(
            request.premise,
            request.hypothesis,
        )))
    }
}

/// Scores a premise as the maximum base score of the units it contains.
///
/// Each premise line is looked up as a rendered unit; unknown lines score
/// `default`. Because a span's score is the max over its units, any span
/// scores at least as high as each of its sub-spans, which makes greedy
/// tree descent exact.
#[derive(Debug, Clone)]
pub struct MaxComposableBackend {
    base: HashMap<String, f64>,
    default: f64,
    max_premise_tokens: Option<usize>,
}

impl MaxComposableBackend {
    pub fn new(base: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            base: base.into_iter().collect(),
            default: 0.0,
            max_premise_tokens: None,
        }
    }

    pub fn with_max_premise_tokens(mut self, limit: usize) -> Self {
        self.max_premise_tokens = Some(limit);
        self
    }

    pub fn base_score(&self, line: &str) -> f64 {
        self.base.get(line).copied().unwrap_or(self.default)
    }
}

impl ScorerBackend for MaxComposableBackend {
    fn name(&self) -> &str {
        "max-composable"
    }

    fn max_premise_tokens(&self) -> Option<usize> {
        self.max_premise_tokens
    }

    fn evaluate(&self, request: &ScoreRequest<'_>) -> Result<BackendOutput, BackendError> {
        let p = request
            .premise
            .split(UNIT_SEPARATOR)
            .map(|l| self.base_score(l))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(BackendOutput::Probability(if p.is_finite() { p } else { self.default }))
    }
}

type EvalFn = dyn Fn(&ScoreRequest<'_>) -> Result<BackendOutput, BackendError> + Send + Sync;

/// Backend defined by a closure.
pub struct FnBackend {
    name: String,
    max_premise_tokens: Option<usize>,
    f: Box<EvalFn>,
}

impl FnBackend {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&ScoreRequest<'_>) -> Result<BackendOutput, BackendError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            max_premise_tokens: None,
            f: Box::new(f),
        }
    }

    pub fn with_max_premise_tokens(mut self, limit: usize) -> Self {
        self.max_premise_tokens = Some(limit);
        self
    }
}

impl ScorerBackend for FnBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn max_premise_tokens(&self) -> Option<usize> {
        self.max_premise_tokens
    }

    fn evaluate(&self, request: &ScoreRequest<'_>) -> Result<BackendOutput, BackendError> {
        (self.f)(request)
    }
}
