use serde::{Deserialize, Serialize};

use super::{check_lengths, MetricError};

/// Default number of equal-width bins.
pub const DEFAULT_BINS: usize = 10;
/// Default cut-off turning a probability into a predicted label.
pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
    /// Fraction of predictions in the bin that match their label (0 when empty).
    pub acc: f64,
    /// Mean predicted probability in the bin (0 when empty).
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins_k: usize,
    pub n: usize,
    /// Probabilities at or above this are predicted positive.
    pub decision_threshold: f64,
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mean_predicted: f64,
    pub fraction_positive: f64,
    pub bin_size: usize,
}

/// Bin of `p` among `k` equal-width bins on `[0, 1]`; the top bin is closed.
pub fn bin_index(p: f64, k: usize) -> usize {
    ((p * k as f64).floor() as usize).min(k - 1)
}

fn validate(probs: &[f64], labels: &[bool], k: usize) -> Result<(), MetricError> {
    check_lengths(probs.len(), labels.len())?;
    if k == 0 {
        return Err(MetricError::ZeroBins);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MetricError::ProbabilityOutOfRange(p));
    }
    Ok(())
}

/// Expected calibration error over `k` equal-width bins.
///
/// Per bin, `acc` is the share of items whose predicted label
/// (`p >= decision_threshold`) equals the true label and `conf` is the mean
/// predicted probability; the ECE is the size-weighted mean of `|acc - conf|`.
/// With `decision_threshold = 0` every item is predicted positive and `acc`
/// becomes the fraction of positives, matching [`calibration_curve`].
pub fn ece(
    probs: &[f64],
    labels: &[bool],
    k: usize,
    decision_threshold: f64,
) -> Result<CalibrationReport, MetricError> {
    validate(probs, labels, k)?;
    if !(0.0..=1.0).contains(&decision_threshold) {
        return Err(MetricError::ProbabilityOutOfRange(decision_threshold));
    }
    let mut size = vec![0usize; k];
    let mut correct = vec![0usize; k];
    let mut conf_sum = vec![0.0f64; k];
    for (&p, &y) in probs.iter().zip(labels) {
        let b = bin_index(p, k);
        size[b] += 1;
        conf_sum[b] += p;
        if (p >= decision_threshold) == y {
            correct[b] += 1;
        }
    }
    let n = probs.len();
    let mut total = 0.0;
    let bins = (0..k)
        .map(|b| {
            let (acc, conf) = if size[b] == 0 {
                (0.0, 0.0)
            } else {
                (correct[b] as f64 / size[b] as f64, conf_sum[b] / size[b] as f64)
            };
            if size[b] > 0 {
                total += size[b] as f64 / n as f64 * (acc - conf).abs();
            }
            CalibrationBin {
                lo: b as f64 / k as f64,
                hi: (b + 1) as f64 / k as f64,
                size: size[b],
                acc,
                conf,
            }
        })
        .collect();
    Ok(CalibrationReport {
        bins_k: k,
        n,
        decision_threshold,
        bins,
        ece: total,
    })
}

/// Reliability-diagram points (mean predicted probability, fraction of
/// positives) for every non-empty bin, in bin order.
pub fn calibration_curve(probs: &[f64], labels: &[bool], k: usize) -> Result<Vec<CurvePoint>, MetricError> {
    validate(probs, labels, k)?;
    let mut size = vec![0usize; k];
    let mut positives = vec![0usize; k];
    let mut sum = vec![0.0f64; k];
    for (&p, &y) in probs.iter().zip(labels) {
        let b = bin_index(p, k);
        size[b] += 1;
        sum[b] += p;
        positives[b] += y as usize;
    }
    Ok((0..k)
        .filter(|&b| size[b] > 0)
        .map(|b| CurvePoint {
            mean_predicted: sum[b] / size[b] as f64,
            fraction_positive: positives[b] as f64 / size[b] as f64,
            bin_size: size[b],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let r = ece(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false], 2, 0.5).unwrap();
        assert!((r.bins[0].conf - 0.2).abs() < 1e-15);
        assert_eq!(r.bins[0].acc, 1.0);
        assert!((r.bins[1].conf - 0.85).abs() < 1e-15);
        assert_eq!(r.bins[1].acc, 1.0);
        assert!((r.ece - 0.475).abs() < 1e-15);
    }

    #[test]
    fn perfect_sharp_classifier() {
        let r = ece(&[1.0; 5], &[true; 5], 10, 0.5).unwrap();
        assert_eq!(r.ece, 0.0);
        assert_eq!(r.bins[9].size, 5);
    }

    #[test]
    fn empty_bins_contribute_nothing() {
        let r = ece(&[0.05, 0.95], &[false, true], 10, 0.5).unwrap();
        assert_eq!(r.bins.iter().map(|b| b.size).sum::<usize>(), 2);
        assert_eq!(r.bins.iter().filter(|b| b.size == 0).count(), 8);
        assert!((r.ece - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boundaries() {
        assert_eq!(bin_index(0.5, 2), 1);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            ece(&[1.2], &[true], 10, 0.5),
            Err(MetricError::ProbabilityOutOfRange(1.2))
        );
        assert_eq!(ece(&[0.2], &[true], 0, 0.5), Err(MetricError::ZeroBins));
        assert!(matches!(
            calibration_curve(&[0.2], &[], 10),
            Err(MetricError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn curve_points() {
        let pts = calibration_curve(&[0.1, 0.2, 0.7], &[false, false, false], 10).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.fraction_positive == 0.0));
        let pts = calibration_curve(&[0.1, 0.3, 0.8, 0.6], &[true, false, true, false], 1).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].mean_predicted - 0.45).abs() < 1e-15);
        assert_eq!(pts[0].fraction_positive, 0.5);
    }
}
