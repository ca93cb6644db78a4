//! Sentence scores as the maximum entailment probability over chunks, and
//! their aggregation over a generated text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{make_chunks, ChunkPlan, UnitRange};
use crate::corpus::{Claim, Document, GeneratedText};
use crate::scorer::{ScoreError, Scorer};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("claim {claim_id:?} belongs to document {claim_doc:?}, plan is for {plan_doc:?}")]
    DocumentMismatch {
        claim_id: String,
        claim_doc: String,
        plan_doc: String,
    },
    #[error("chunk plan for {doc_id:?} is empty")]
    EmptyPlan { doc_id: String },
    #[error("largest chunk has {tokens} tokens, backend accepts at most {limit}")]
    ChunkTooLarge { tokens: usize, limit: usize },
    #[error("claim {claim_id:?}: {} of {} chunks failed, first: {}", failures.len(), failures.len() + partial.len(), failures[0].1)]
    ChunksFailed {
        claim_id: String,
        /// `(chunk index, error)` for every chunk that failed.
        failures: Vec<(usize, ScoreError)>,
        /// `(chunk index, probability)` for every chunk that succeeded.
        partial: Vec<(usize, f64)>,
    },
}

impl EngineError {
    /// True when the failure came from the backend transport.
    pub fn is_transport(&self) -> bool {
        match self {
            Self::ChunksFailed { failures, .. } => failures
                .iter()
                .any(|(_, e)| matches!(e, ScoreError::Backend(b) if b.is_transport())),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkProbability {
    pub unit_range: UnitRange,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub claim_id: String,
    pub score: f64,
    pub argmax_chunk: UnitRange,
    pub argmax_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_chunk: Option<Vec<ChunkProbability>>,
    pub scorer_calls: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// A text is only as consistent as its least supported sentence.
    #[default]
    Min,
    Mean,
}

impl Aggregation {
    pub fn apply(self, scores: &[f64]) -> f64 {
        match self {
            Self::Min => scores.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Min => "min",
            Self::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Self::Min),
            "mean" => Ok(Self::Mean),
            other => Err(format!("unknown aggregation {other:?} (expected min or mean)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub doc_id: String,
    pub sentence_scores: Vec<SentenceScore>,
    pub aggregate: f64,
    pub aggregation: Aggregation,
}

/// `score >= threshold`.
pub fn classify(score: f64, threshold: f64) -> bool {
    score >= threshold
}

/// Index and value of the maximum, first index on ties.
fn first_max(probs: &[f64]) -> (usize, f64) {
    let mut best = (0, probs[0]);
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > best.1 {
            best = (i, p);
        }
    }
    best
}

fn check_plan(plan: &ChunkPlan, scorer: &Scorer) -> Result<(), EngineError> {
    if plan.is_empty() {
        return Err(EngineError::EmptyPlan {
            doc_id: plan.doc_id.clone(),
        });
    }
    if let Some(limit) = scorer.premise_limit() {
        let tokens = plan.max_chunk_tokens();
        if tokens > limit {
            return Err(EngineError::ChunkTooLarge { tokens, limit });
        }
    }
    Ok(())
}

fn assemble(
    plan: &ChunkPlan,
    claim: &Claim,
    results: Vec<Result<f64, ScoreError>>,
    explain: bool,
) -> Result<SentenceScore, EngineError> {
    let mut probs = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => probs.push((i, p)),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        return Err(EngineError::ChunksFailed {
            claim_id: claim.id.clone(),
            failures,
            partial: probs,
        });
    }
    let values: Vec<f64> = probs.iter().map(|&(_, p)| p).collect();
    let (argmax_index, score) = first_max(&values);
    Ok(SentenceScore {
        claim_id: claim.id.clone(),
        score,
        argmax_chunk: plan.chunks[argmax_index].unit_range,
        argmax_index,
        per_chunk: explain.then(|| {
            plan.chunks
                .iter()
                .zip(&values)
                .map(|(c, &probability)| ChunkProbability {
                    unit_range: c.unit_range,
                    probability,
                })
                .collect()
        }),
        scorer_calls: plan.len(),
    })
}

/// Scores several claims against one plan with a single batch of
/// `plan.len() * claims.len()` scorer calls. Each claim succeeds or fails
/// independently.
pub fn score_claims(
    plan: &ChunkPlan,
    claims: &[&Claim],
    scorer: &Scorer,
    explain: bool,
) -> Vec<Result<SentenceScore, EngineError>> {
    if let Err(e) = check_plan(plan, scorer) {
        return claims.iter().map(|_| Err(e.clone())).collect();
    }
    let mut pairs = Vec::with_capacity(plan.len() * claims.len());
    for claim in claims.iter().filter(|c| c.doc_id == plan.doc_id) {
        for chunk in &plan.chunks {
            pairs.push((chunk.text.as_str(), claim.text.as_str()));
        }
    }
    let mut results = scorer.score_batch(&pairs).into_iter();
    claims
        .iter()
        .map(|claim| {
            if claim.doc_id != plan.doc_id {
                return Err(EngineError::DocumentMismatch {
                    claim_id: claim.id.clone(),
                    claim_doc: claim.doc_id.clone(),
                    plan_doc: plan.doc_id.clone(),
                });
            }
            let chunk_results: Vec<_> = results
                .by_ref()
                .take(plan.len())
                .map(|r| r.map(|s| s.probability))
                .collect();
            assemble(plan, claim, chunk_results, explain)
        })
        .collect()
}

/// Maximum entailment probability of `claim` over every chunk in `plan`.
pub fn scale_sentence(
    plan: &ChunkPlan,
    claim: &Claim,
    scorer: &Scorer,
    explain: bool,
) -> Result<SentenceScore, EngineError> {
    if claim.doc_id != plan.doc_id {
        return Err(EngineError::DocumentMismatch {
            claim_id: claim.id.clone(),
            claim_doc: claim.doc_id.clone(),
            plan_doc: plan.doc_id.clone(),
        });
    }
    score_claims(plan, &[claim], scorer, explain)
        .pop()
        .expect("one result per claim")
}

/// Scores every sentence of `text` against `doc` chunked at `budget` and
/// aggregates the sentence scores.
pub fn scale_text(
    doc: &Document,
    text: &GeneratedText<'_>,
    budget: usize,
    scorer: &Scorer,
    aggregation: Aggregation,
    explain: bool,
) -> Result<TextScore, EngineError> {
    let plan = make_chunks(doc, budget, scorer.counter());
    if let Some(c) = text.sentences.iter().find(|c| c.doc_id != doc.id) {
        return Err(EngineError::DocumentMismatch {
            claim_id: c.id.clone(),
            claim_doc: c.doc_id.clone(),
            plan_doc: doc.id.clone(),
        });
    }
    let sentence_scores = score_claims(&plan, &text.sentences, scorer, explain)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let values: Vec<f64> = sentence_scores.iter().map(|s| s.score).collect();
    Ok(TextScore {
        doc_id: doc.id.clone(),
        aggregate: aggregation.apply(&values),
        sentence_scores,
        aggregation,
    })
}
