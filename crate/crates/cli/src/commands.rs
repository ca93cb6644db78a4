//! Command implementations. Each takes a loaded corpus and an injected
//! scorer, so tests can swap in mock backends.

use std::collections::BTreeSet;
use std::time::Instant;

use longfact_core::engine::score_claims;
use longfact_core::metrics::{calibration_curve, ece, retrieval_recall, roc_auc, CalibrationBin, CurvePoint};
use longfact_core::retrieval::{BruteForceResult, TraceLevel};
use longfact_core::{
    brute_force_retrieve, make_chunks, retrieval_hit, retrieve, scale_text, Aggregation, ChunkPlan, Claim, Corpus,
    EvalReport, RetrieveOptions, Scorer, SentenceScore,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Envelope, Metadata};

struct Clock {
    start: Instant,
    calls_before: u64,
}

impl Clock {
    fn start(scorer: &Scorer) -> Self {
        Self {
            start: Instant::now(),
            calls_before: scorer.backend_calls(),
        }
    }

    fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn finish(&self, scorer: &Scorer) -> Metadata {
        Metadata {
            wall_clock_s: self.elapsed_s(),
            backend_calls: scorer.backend_calls() - self.calls_before,
            sweep_wall_clock_s: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSummary {
    pub doc_id: String,
    pub claim_ids: Vec<String>,
    pub aggregate: f64,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub budget: usize,
    pub sentences: Vec<SentenceScore>,
    pub texts: Vec<TextSummary>,
    pub scorer_calls: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ScoreOptions {
    /// Keep every chunk's probability in the report.
    pub explain: bool,
}

fn plans(corpus: &Corpus, budget: usize, scorer: &Scorer) -> Vec<ChunkPlan> {
    corpus
        .documents()
        .iter()
        .map(|d| make_chunks(d, budget, scorer.counter()))
        .collect()
}

/// Chunk plans for every document, as written by `--dump-chunks`.
pub fn chunk_plans(corpus: &Corpus, config: &RunConfig, scorer: &Scorer) -> Vec<ChunkPlan> {
    plans(corpus, config.budget, scorer)
}

/// Scores every claim against its document, grouped into one text per document.
pub fn cmd_score(
    corpus: &Corpus,
    config: &RunConfig,
    scorer: &Scorer,
    options: &ScoreOptions,
) -> Result<Envelope<ScoreReport>, CliError> {
    let clock = Clock::start(scorer);
    let mut sentences = Vec::with_capacity(corpus.claims().len());
    let mut texts = Vec::new();
    for text in corpus.texts() {
        let doc = corpus.document(text.doc_id).expect("corpus validated doc ids");
        let scored = scale_text(doc, &text, config.budget, scorer, config.aggregation, options.explain)?;
        texts.push(TextSummary {
            doc_id: scored.doc_id,
            claim_ids: scored.sentence_scores.iter().map(|s| s.claim_id.clone()).collect(),
            aggregate: scored.aggregate,
            aggregation: scored.aggregation,
        });
        sentences.extend(scored.sentence_scores);
    }
    let report = ScoreReport {
        budget: config.budget,
        scorer_calls: sentences.iter().map(|s| s.scorer_calls).sum(),
        sentences,
        texts,
    };
    Ok(Envelope::new(
        "score",
        config,
        corpus.content_hash(),
        report,
        clock.finish(scorer),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRetrieval {
    pub claim_id: String,
    pub doc_id: String,
    pub result_unit: usize,
    pub result_score: f64,
    pub scorer_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<TraceLevel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<BruteForceResult>,
    /// Greedy and exhaustive search picked the same unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
    /// Retrieved unit is annotated as relevant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveReport {
    pub k: usize,
    pub claims: Vec<ClaimRetrieval>,
    pub scorer_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force_scorer_calls: Option<usize>,
    /// Hit rate over annotated claims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RetrieveFlags {
    /// Include every level of the search.
    pub trace: bool,
    /// Also score every unit and report agreement.
    pub brute_force: bool,
}

fn retrieve_one(
    corpus: &Corpus,
    claim: &Claim,
    config: &RunConfig,
    scorer: &Scorer,
    flags: &RetrieveFlags,
) -> Result<ClaimRetrieval, CliError> {
    let doc = corpus.document(&claim.doc_id).expect("corpus validated doc ids");
    let options = RetrieveOptions {
        k: config.k,
        premise_budget: None,
    };
    let trace = retrieve(doc, claim, scorer, options)?;
    let hit = match claim.relevant_set() {
        Some(set) if !set.is_empty() => Some(retrieval_hit(&trace, &set)?),
        _ => None,
    };
    let brute_force = if flags.brute_force {
        Some(brute_force_retrieve(doc, claim, scorer)?)
    } else {
        None
    };
    Ok(ClaimRetrieval {
        claim_id: claim.id.clone(),
        doc_id: claim.doc_id.clone(),
        result_unit: trace.result_unit,
        result_score: trace.result_score,
        scorer_calls: trace.scorer_calls,
        agrees: brute_force.map(|b| b.unit == trace.result_unit),
        brute_force,
        levels: flags.trace.then_some(trace.levels),
        hit,
    })
}

/// Greedy evidence retrieval for every claim.
pub fn cmd_retrieve(
    corpus: &Corpus,
    config: &RunConfig,
    scorer: &Scorer,
    flags: &RetrieveFlags,
) -> Result<Envelope<RetrieveReport>, CliError> {
    let clock = Clock::start(scorer);
    let claims = corpus
        .claims()
        .iter()
        .map(|c| retrieve_one(corpus, c, config, scorer, flags))
        .collect::<Result<Vec<_>, _>>()?;
    let hits: Vec<bool> = claims.iter().filter_map(|c| c.hit).collect();
    let report = RetrieveReport {
        k: config.k,
        scorer_calls: claims.iter().map(|c| c.scorer_calls).sum(),
        brute_force_scorer_calls: flags.brute_force.then(|| {
            claims
                .iter()
                .filter_map(|c| c.brute_force.map(|b| b.scorer_calls))
                .sum()
        }),
        recall: retrieval_recall(&hits).ok(),
        claims,
    };
    Ok(Envelope::new(
        "retrieve",
        config,
        corpus.content_hash(),
        report,
        clock.finish(scorer),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub claim_id: String,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSummary {
    pub claims: usize,
    pub hits: usize,
    pub recall: f64,
    pub scorer_calls: usize,
}

/// Accuracy metrics; timing lives in the envelope metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub budget: usize,
    pub n: usize,
    pub roc_auc: f64,
    pub pearson: f64,
    pub kendall_tau: f64,
    pub f1_macro: f64,
    pub optimal_threshold: f64,
    pub scorer_calls_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval: Option<RetrievalSummary>,
    pub scores: Vec<LabeledScore>,
}

fn labels_of(corpus: &Corpus) -> Result<(), CliError> {
    let missing: Vec<&str> = corpus
        .claims()
        .iter()
        .filter(|c| c.label.is_none())
        .map(|c| c.id.as_str())
        .collect();
    if corpus.claims().is_empty() {
        return Err(CliError::Validation("no claims to evaluate".into()));
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).copied().collect();
        return Err(CliError::Validation(format!(
            "{} claim(s) have no gold label (first: {}); add a boolean \"label\" field to every claim",
            missing.len(),
            shown.join(", ")
        )));
    }
    Ok(())
}

/// Scores every claim at `budget`, in corpus claim order, with the
/// scorer-call accounting (`chunks * claims` per document).
fn score_all(corpus: &Corpus, budget: usize, scorer: &Scorer) -> Result<(Vec<LabeledScore>, usize), CliError> {
    let mut by_claim = Vec::with_capacity(corpus.claims().len());
    let mut calls = 0;
    for (text, plan) in corpus.texts().iter().zip(plans(corpus, budget, scorer)) {
        debug_assert_eq!(text.doc_id, plan.doc_id);
        for s in score_claims(&plan, &text.sentences, scorer, false) {
            let s = s?;
            calls += s.scorer_calls;
            by_claim.push((s.claim_id, s.score));
        }
    }
    let index: std::collections::HashMap<String, f64> = by_claim.into_iter().collect();
    let scores = corpus
        .claims()
        .iter()
        .map(|c| LabeledScore {
            claim_id: c.id.clone(),
            score: index[&c.id],
            label: c.label.unwrap_or(false),
        })
        .collect();
    Ok((scores, calls))
}

fn split(scores: &[LabeledScore]) -> (Vec<f64>, Vec<bool>) {
    scores.iter().map(|s| (s.score, s.label)).unzip()
}

/// Evaluation against gold labels, plus retrieval recall when any claim
/// carries relevant-unit annotations.
pub fn cmd_evaluate(
    corpus: &Corpus,
    config: &RunConfig,
    scorer: &Scorer,
) -> Result<(Envelope<EvaluateReport>, EvalReport), CliError> {
    labels_of(corpus)?;
    let clock = Clock::start(scorer);
    let (scores, calls) = score_all(corpus, config.budget, scorer)?;
    let (s, l) = split(&scores);
    let annotated: Vec<&Claim> = corpus
        .claims()
        .iter()
        .filter(|c| c.relevant_set().is_some_and(|r: BTreeSet<usize>| !r.is_empty()))
        .collect();
    let retrieval = if annotated.is_empty() {
        None
    } else {
        let flags = RetrieveFlags::default();
        let results = annotated
            .iter()
            .map(|c| retrieve_one(corpus, c, config, scorer, &flags))
            .collect::<Result<Vec<_>, _>>()?;
        let hits: Vec<bool> = results.iter().map(|r| r.hit.unwrap_or(false)).collect();
        Some(RetrievalSummary {
            claims: hits.len(),
            hits: hits.iter().filter(|&&h| h).count(),
            recall: retrieval_recall(&hits)?,
            scorer_calls: results.iter().map(|r| r.scorer_calls).sum(),
        })
    };
    let total_calls = calls + retrieval.as_ref().map_or(0, |r| r.scorer_calls);
    let eval = EvalReport::compute(&s, &l, clock.elapsed_s(), total_calls as u64)?;
    let report = EvaluateReport {
        budget: config.budget,
        n: eval.n,
        roc_auc: eval.roc_auc,
        pearson: eval.pearson,
        kendall_tau: eval.kendall_tau,
        f1_macro: eval.f1_macro,
        optimal_threshold: eval.optimal_threshold,
        scorer_calls_total: eval.scorer_calls_total,
        retrieval,
        scores,
    };
    let mut metadata = clock.finish(scorer);
    metadata.wall_clock_s = metadata.wall_clock_s.max(eval.wall_clock_s);
    Ok((
        Envelope::new("evaluate", config, corpus.content_hash(), report, metadata),
        eval,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub budget: usize,
    pub ece: f64,
    pub bins: Vec<CalibrationBin>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateReport {
    pub bins_k: usize,
    pub decision_threshold: f64,
    pub rows: Vec<CalibrationRow>,
}

fn sweep_or_default(sweep: &[usize], config: &RunConfig) -> Result<Vec<usize>, CliError> {
    if sweep.is_empty() {
        return Ok(vec![config.budget]);
    }
    if let Some(&b) = sweep.iter().find(|&&b| b == 0) {
        return Err(CliError::Validation(format!("sweep budgets must be positive, got {b}")));
    }
    Ok(sweep.to_vec())
}

/// ECE and reliability curve per chunk budget.
pub fn cmd_calibrate(
    corpus: &Corpus,
    config: &RunConfig,
    scorer: &Scorer,
    sweep: &[usize],
) -> Result<Envelope<CalibrateReport>, CliError> {
    labels_of(corpus)?;
    let clock = Clock::start(scorer);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for budget in sweep_or_default(sweep, config)? {
        let started = Instant::now();
        let (scores, _) = score_all(corpus, budget, scorer)?;
        let (s, l) = split(&scores);
        let cal = ece(&s, &l, config.bins, config.threshold)?;
        rows.push(CalibrationRow {
            budget,
            ece: cal.ece,
            bins: cal.bins,
            curve: calibration_curve(&s, &l, config.bins)?,
        });
        timings.push(started.elapsed().as_secs_f64());
    }
    let report = CalibrateReport {
        bins_k: config.bins,
        decision_threshold: config.threshold,
        rows,
    };
    let mut metadata = clock.finish(scorer);
    metadata.sweep_wall_clock_s = timings;
    Ok(Envelope::new(
        "calibrate",
        config,
        corpus.content_hash(),
        report,
        metadata,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub budget: usize,
    pub roc_auc: f64,
    /// Kept out of the JSON report so reruns compare equal; the envelope
    /// metadata and the CSV carry it.
    #[serde(skip)]
    pub wall_clock_s: f64,
    pub scorer_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

/// ROC-AUC, wall-clock time and scorer calls per chunk budget.
pub fn cmd_bench(
    corpus: &Corpus,
    config: &RunConfig,
    scorer: &Scorer,
    sweep: &[usize],
) -> Result<Envelope<BenchReport>, CliError> {
    labels_of(corpus)?;
    let clock = Clock::start(scorer);
    let mut rows = Vec::new();
    for budget in sweep_or_default(sweep, config)? {
        let started = Instant::now();
        let (scores, scorer_calls) = score_all(corpus, budget, scorer)?;
        let (s, l) = split(&scores);
        rows.push(BenchRow {
            budget,
            roc_auc: roc_auc(&s, &l)?,
            wall_clock_s: started.elapsed().as_secs_f64(),
            scorer_calls,
        });
    }
    let mut metadata = clock.finish(scorer);
    metadata.sweep_wall_clock_s = rows.iter().map(|r| r.wall_clock_s).collect();
    Ok(Envelope::new(
        "bench",
        config,
        corpus.content_hash(),
        BenchReport { rows },
        metadata,
    ))
}
