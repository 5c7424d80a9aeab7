//! Detection and identification metrics: ROC curves, AUC, equal error rate
//! and precision at a fixed recall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexSubset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    /// `(P_fa, P_d)` pairs from the strictest threshold to the loosest.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub eer: f64,
}

/// ROC curve of "declare H1 when statistic ≥ t" over every pooled threshold.
///
/// Tied H0/H1 values move the curve diagonally, so the trapezoid rule
/// credits each tie with one half.
pub fn roc(h0: &[f64], h1: &[f64]) -> Result<RocSummary> {
    if h0.is_empty() || h1.is_empty() {
        return Err(Error::InvalidParameter(
            "ROC needs statistics under both hypotheses".into(),
        ));
    }
    if h0.iter().chain(h1).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("detection statistics"));
    }
    let mut pooled: Vec<(f64, bool)> = h0
        .iter()
        .map(|&v| (v, false))
        .chain(h1.iter().map(|&v| (v, true)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (n0, n1) = (h0.len() as f64, h1.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut fa, mut det) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        while i < pooled.len() && pooled[i].0 == t {
            if pooled[i].1 {
                det += 1;
            } else {
                fa += 1;
            }
            i += 1;
        }
        points.push((fa as f64 / n0, det as f64 / n1));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocSummary {
        eer: equal_error_rate(&points),
        points,
        auc,
    })
}

/// `P_fa` where the piecewise-linear curve crosses `P_fa = 1 − P_d`.
fn equal_error_rate(points: &[(f64, f64)]) -> f64 {
    let f = |p: (f64, f64)| p.0 + p.1 - 1.0;
    for w in points.windows(2) {
        let (f0, f1) = (f(w[0]), f(w[1]));
        if f0 <= 0.0 && f1 >= 0.0 {
            if f1 == f0 {
                return w[0].0;
            }
            let t = -f0 / (f1 - f0);
            return w[0].0 + t * (w[1].0 - w[0].0);
        }
    }
    0.5
}

/// Precision of the shortest score-ranked prefix whose recall reaches `level`.
/// Ties in score are broken by vertex index.
pub fn precision_at_recall(scores: &[f64], truth: &VertexSubset, level: f64) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("truth set is empty".into()));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "recall level {level} outside (0, 1]"
        )));
    }
    if let Some(v) = truth.iter().find(|&v| v >= scores.len()) {
        return Err(Error::VertexOutOfRange {
            vertex: v,
            n: scores.len(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let need = truth.len() as f64 * level;
    let mut hits = 0usize;
    for (depth, &v) in order.iter().enumerate() {
        if truth.contains(v) {
            hits += 1;
        }
        if hits as f64 >= need - 1e-12 {
            return Ok(hits as f64 / (depth + 1) as f64);
        }
    }
    Ok(hits as f64 / order.len() as f64)
}
