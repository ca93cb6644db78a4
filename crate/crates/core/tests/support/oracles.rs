//! Quadratic-time reference implementations of the metrics.

pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn pearson_naive(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn tau_b_pairs(x: &[f64], y: &[f64]) -> f64 {
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if dx.signum() == dy.signum() {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    (conc - disc) as f64 / (((conc + disc + tx) * (conc + disc + ty)) as f64).sqrt()
}

pub fn macro_f1_of(pred: &[bool], labels: &[bool]) -> f64 {
    let count = |p: bool, l: bool| pred.iter().zip(labels).filter(|&(&a, &b)| a == p && b == l).count() as f64;
    let (tp, fp, fn_, tn) = (
        count(true, true),
        count(true, false),
        count(false, true),
        count(false, false),
    );
    let f1 = |tp: f64, fp: f64, fn_: f64| {
        if tp + fp + fn_ == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        }
    };
    (f1(tp, fp, fn_) + f1(tn, fn_, fp)) / 2.0
}

/// Best macro-F1 over "positive iff score >= t" for every t in the scores
/// plus +inf, with the lowest such t.
pub fn f1_scan(scores: &[f64], labels: &[bool]) -> (f64, f64) {
    let mut ts: Vec<f64> = scores.to_vec();
    ts.push(f64::INFINITY);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for t in ts {
        let pred: Vec<bool> = scores.iter().map(|&s| s >= t).collect();
        let f = macro_f1_of(&pred, labels);
        if f > best.0 {
            best = (f, t);
        }
    }
    best
}

pub fn ece_naive(probs: &[f64], labels: &[bool], k: usize, threshold: f64) -> f64 {
    let n = probs.len() as f64;
    let mut total = 0.0;
    for b in 0..k {
        let members: Vec<usize> = (0..probs.len())
            .filter(|&i| {
                let idx = ((probs[i] * k as f64).floor() as usize).min(k - 1);
                idx == b
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        let acc = members
            .iter()
            .filter(|&&i| (probs[i] >= threshold) == labels[i])
            .count() as f64
            / m;
        let conf = members.iter().map(|&i| probs[i]).sum::<f64>() / m;
        total += m / n * (acc - conf).abs();
    }
    total
}
