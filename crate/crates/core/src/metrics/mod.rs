//! Accuracy, correlation and calibration metrics for consistency scores.

mod calibration;
mod ranking;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibration::{
    bin_index, calibration_curve, ece, CalibrationBin, CalibrationReport, CurvePoint, DEFAULT_BINS,
    DEFAULT_DECISION_THRESHOLD,
};
pub use ranking::{f1_macro_optimal, kendall_tau, pearson, roc_auc};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need both positive and negative labels")]
    SingleClass,
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined for constant input")]
    Constant,
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("no observations")]
    Empty,
}

pub(crate) fn check_lengths(left: usize, right: usize) -> Result<(), MetricError> {
    if left != right {
        return Err(MetricError::LengthMismatch { left, right });
    }
    Ok(())
}

pub(crate) fn check_finite(v: &[f64]) -> Result<(), MetricError> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(&x) => Err(MetricError::NonFinite(x)),
        None => Ok(()),
    }
}

/// Share of claims whose retrieved unit was annotated as relevant.
pub fn retrieval_recall(hits: &[bool]) -> Result<f64, MetricError> {
    if hits.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// Accuracy summary over scored, labeled claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub roc_auc: f64,
    pub pearson: f64,
    pub kendall_tau: f64,
    pub f1_macro: f64,
    pub optimal_threshold: f64,
    pub wall_clock_s: f64,
    pub scorer_calls_total: u64,
}

impl EvalReport {
    /// Computes every accuracy metric, correlating scores against 0/1 labels.
    pub fn compute(
        scores: &[f64],
        labels: &[bool],
        wall_clock_s: f64,
        scorer_calls_total: u64,
    ) -> Result<Self, MetricError> {
        let y: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
        let (f1_macro, optimal_threshold) = f1_macro_optimal(scores, labels)?;
        Ok(Self {
            n: scores.len(),
            roc_auc: roc_auc(scores, labels)?,
            pearson: pearson(scores, &y)?,
            kendall_tau: kendall_tau(scores, &y)?,
            f1_macro,
            optimal_threshold,
            wall_clock_s,
            scorer_calls_total,
        })
    }
}
