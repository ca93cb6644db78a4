use super::{check_finite, check_lengths, MetricError};

fn both_classes(labels: &[bool]) -> Result<(usize, usize), MetricError> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::SingleClass);
    }
    Ok((pos, neg))
}

/// Area under the ROC curve via the Mann-Whitney U statistic.
///
/// Tied scores share their average rank, so a tied positive/negative pair
/// counts one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    check_lengths(scores.len(), labels.len())?;
    check_finite(scores)?;
    let (pos, neg) = both_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j averaged.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += mid_rank * pos_in_group as f64;
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(MetricError::TooShort(x.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::Constant);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pairs among runs of equal values in an already sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(v);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Stable merge sort of `v` by value, returning the number of inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b, computed in `O(n log n)` with Knight's merge-sort method.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_lengths(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(MetricError::TooShort(x.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let ties_x = tied_pairs(pairs.iter().map(|p| p.0));
    let ties_xy = tied_pairs(pairs.iter().copied());
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = sort_counting_swaps(&mut ys, &mut buf);
    let ties_y = tied_pairs(ys.iter().copied());
    let denom_x = (n0 - ties_x) as f64;
    let denom_y = (n0 - ties_y) as f64;
    if denom_x == 0.0 || denom_y == 0.0 {
        return Err(MetricError::Constant);
    }
    let concordant_minus_discordant = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    Ok((concordant_minus_discordant / (denom_x * denom_y).sqrt()).clamp(-1.0, 1.0))
}

/// Mean of the positive-class and negative-class F1 scores.
pub(crate) fn macro_f1(tp: usize, fp: usize, fn_: usize, tn: usize) -> f64 {
    let f1 = |tp: usize, fp: usize, fn_: usize| {
        let d = 2 * tp + fp + fn_;
        if d == 0 {
            0.0
        } else {
            2.0 * tp as f64 / d as f64
        }
    };
    (f1(tp, fp, fn_) + f1(tn, fn_, fp)) / 2.0
}

/// Best macro-F1 over decision thresholds, with the lowest threshold that reaches it.
///
/// Candidates are the minimum score (everything positive), the midpoints
/// between adjacent distinct scores, and the next float above the maximum
/// (everything negative). A score counts as positive when `score >= threshold`.
pub fn f1_macro_optimal(scores: &[f64], labels: &[bool]) -> Result<(f64, f64), MetricError> {
    check_lengths(scores.len(), labels.len())?;
    check_finite(scores)?;
    let (pos, neg) = both_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Group boundaries over distinct values, ascending.
    let mut groups: Vec<(f64, usize, usize)> = Vec::new(); // (value, positives, negatives)
    for &i in &order {
        match groups.last_mut() {
            Some(g) if g.0 == scores[i] => {
                if labels[i] {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((scores[i], labels[i] as usize, (!labels[i]) as usize)),
        }
    }

    // Threshold c_g predicts positive exactly for groups g.. (all of them for g = 0).
    let mut best = (f64::NEG_INFINITY, 0.0);
    let (mut tp, mut fp) = (pos, neg);
    for g in 0..=groups.len() {
        let threshold = match g {
            0 => groups[0].0,
            g if g == groups.len() => groups[g - 1].0.next_up(),
            g => groups[g - 1].0 + (groups[g].0 - groups[g - 1].0) / 2.0,
        };
        let f1 = macro_f1(tp, fp, pos - tp, neg - fp);
        if f1 > best.0 {
            best = (f1, threshold);
        }
        if g < groups.len() {
            tp -= groups[g].1;
            fp -= groups[g].2;
        }
    }
    Ok(best)
}
