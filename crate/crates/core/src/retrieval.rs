//! Evidence retrieval by greedy search-tree descent.
//!
//! Starting from the whole document, the current range is split into `k`
//! token-balanced parts, each part is scored against the claim, and the
//! descent continues into the best-scoring part until a single unit remains.
//! A document of `n` units costs about `k * log_k(n)` scorer calls, against
//! `n` for scoring every unit on its own ([`brute_force_retrieve`]).
//!
//! The descent is exact when the scorer is max-composable (a span scores the
//! max of its units). Real entailment models are not, so the greedy path can
//! miss the best single unit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{split_range_capped, UnitRange};
use crate::corpus::{Claim, Document};
use crate::scorer::{ScoreError, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrieveOptions {
    /// Parts per split. Widened per level when a part would not fit the premise budget.
    pub k: usize,
    /// Premise budget in tokens, on top of any limit the backend declares.
    pub premise_budget: Option<usize>,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        Self {
            k: 2,
            premise_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub candidate_ranges: Vec<UnitRange>,
    pub scores: Vec<f64>,
    pub chosen: usize,
}

impl TraceLevel {
    pub fn chosen_range(&self) -> UnitRange {
        self.candidate_ranges[self.chosen]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTrace {
    pub claim_id: String,
    pub levels: Vec<TraceLevel>,
    pub result_unit: usize,
    pub result_score: f64,
    pub scorer_calls: usize,
}

impl RetrievalTrace {
    /// Re-scores every recorded range and checks that the recorded scores
    /// and choices come out the same.
    pub fn replays(&self, doc: &Document, claim: &Claim, scorer: &Scorer) -> Result<bool, ScoreError> {
        for level in &self.levels {
            let mut scores = Vec::with_capacity(level.scores.len());
            for r in &level.candidate_ranges {
                scores.push(scorer.score_pair(&doc.text_of(*r), &claim.text)?.probability);
            }
            if scores != level.scores || first_max(&scores) != level.chosen {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub unit: usize,
    pub score: f64,
    pub scorer_calls: usize,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RetrievalError {
    #[error("branching factor must be at least 2, got {0}")]
    InvalidBranching(usize),
    #[error("document {0:?} has no units")]
    EmptyDocument(String),
    #[error("claim {claim_id:?}: scoring failed after {} level(s): {error}", partial.levels.len())]
    Scoring {
        claim_id: String,
        error: ScoreError,
        /// Levels completed before the failure.
        partial: Box<RetrievalTrace>,
    },
    #[error("relevant-unit set is empty")]
    EmptyRelevantSet,
}

fn first_max(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Smallest `d` with `k^d >= n`.
pub fn ceil_log(k: usize, n: usize) -> usize {
    let mut d = 0;
    let mut reach = 1usize;
    while reach < n {
        reach = reach.saturating_mul(k);
        d += 1;
    }
    d
}

/// Upper bound on `retrieve`'s scorer calls for `n` units when no part
/// ever has to be widened: `k * ceil(log_k n) + k`.
pub fn call_bound(k: usize, n: usize) -> usize {
    k * ceil_log(k, n) + k
}

/// Greedy descent to the unit that best supports `claim`.
pub fn retrieve(
    doc: &Document,
    claim: &Claim,
    scorer: &Scorer,
    options: RetrieveOptions,
) -> Result<RetrievalTrace, RetrievalError> {
    let k = options.k;
    if k < 2 {
        return Err(RetrievalError::InvalidBranching(k));
    }
    if doc.is_empty() {
        return Err(RetrievalError::EmptyDocument(doc.id.clone()));
    }
    let limit = match (options.premise_budget, scorer.premise_limit()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let counter = scorer.counter();
    let counts = doc.token_counts(counter);
    let fits = |r: &UnitRange| limit.is_none_or(|l| r.len() == 1 || counts[r.start..r.end].iter().sum::<usize>() <= l);

    // One spare level beyond ceil(log_k n) absorbs token imbalance; the unit
    // cap below keeps every subtree finishable in the levels that remain.
    let max_levels = ceil_log(k, doc.len()) + 1;
    let mut trace = RetrievalTrace {
        claim_id: claim.id.clone(),
        levels: Vec::new(),
        result_unit: 0,
        result_score: 0.0,
        scorer_calls: 0,
    };
    let mut current = doc.full_range();
    loop {
        let remaining = max_levels.saturating_sub(trace.levels.len()).max(1);
        let cap = k.checked_pow((remaining - 1) as u32).unwrap_or(usize::MAX);
        let mut width = k;
        let parts = loop {
            let parts = if current.len() == 1 {
                vec![current]
            } else {
                split_range_capped(doc, current, width, counter, cap)
            };
            if parts.len() == current.len() || parts.iter().all(&fits) {
                break parts;
            }
            width += 1;
        };
        let texts: Vec<(String, &str)> = parts.iter().map(|r| (doc.text_of(*r), claim.text.as_str())).collect();
        let mut scores = Vec::with_capacity(parts.len());
        for r in scorer.score_batch(&texts) {
            match r {
                Ok(s) => scores.push(s.probability),
                Err(error) => {
                    return Err(RetrievalError::Scoring {
                        claim_id: claim.id.clone(),
                        error,
                        partial: Box::new(trace),
                    })
                }
            }
        }
        trace.scorer_calls += parts.len();
        let chosen = first_max(&scores);
        let next = parts[chosen];
        trace.result_score = scores[chosen];
        trace.levels.push(TraceLevel {
            candidate_ranges: parts,
            scores,
            chosen,
        });
        if next.len() == 1 {
            trace.result_unit = next.start;
            return Ok(trace);
        }
        current = next;
    }
}

/// Scores every unit on its own and returns the best, lowest index on ties.
pub fn brute_force_retrieve(
    doc: &Document,
    claim: &Claim,
    scorer: &Scorer,
) -> Result<BruteForceResult, RetrievalError> {
    if doc.is_empty() {
        return Err(RetrievalError::EmptyDocument(doc.id.clone()));
    }
    let pairs: Vec<(String, &str)> = doc
        .units()
        .iter()
        .map(|u| (u.rendered().into_owned(), claim.text.as_str()))
        .collect();
    let mut scores = Vec::with_capacity(pairs.len());
    for r in scorer.score_batch(&pairs) {
        let s = r.map_err(|error| RetrievalError::Scoring {
            claim_id: claim.id.clone(),
            error,
            partial: Box::new(RetrievalTrace {
                claim_id: claim.id.clone(),
                levels: Vec::new(),
                result_unit: 0,
                result_score: 0.0,
                scorer_calls: 0,
            }),
        })?;
        scores.push(s.probability);
    }
    let unit = first_max(&scores);
    Ok(BruteForceResult {
        unit,
        score: scores[unit],
        scorer_calls: scores.len(),
    })
}

/// Whether the retrieved unit is one of the annotated relevant units.
pub fn retrieval_hit(trace: &RetrievalTrace, relevant_units: &BTreeSet<usize>) -> Result<bool, RetrievalError> {
    if relevant_units.is_empty() {
        return Err(RetrievalError::EmptyRelevantSet);
    }
    Ok(relevant_units.contains(&trace.result_unit))
}
