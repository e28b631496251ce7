//! Ranking and classification metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::stats::midranks;
use super::EvalError;
use crate::corpus::Truth;

fn class_counts(labels: &[u8]) -> Result<(usize, usize), EvalError> {
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank-statistic AUC: `P(score_pos > score_neg) + P(equal) / 2`.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let (pos, neg) = class_counts(labels)?;
    let (ranks, _) = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l != 0).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    /// Predict positive when `score >= threshold`; `+inf` predicts nothing.
    pub threshold: f64,
    pub j: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Threshold maximising `J = TPR - FPR` over the distinct scores plus `+inf`.
/// Ties go to the higher TPR, then the lower threshold.
pub fn youden_threshold(scores: &[f64], labels: &[u8]) -> Result<YoudenPoint, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let (pos, neg) = class_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // J * pos * neg = tp * neg - fp * pos, compared exactly in integers
    let scaled = |tp: usize, fp: usize| tp as i128 * neg as i128 - fp as i128 * pos as i128;
    let (mut best_tp, mut best_fp, mut best_thr) = (0usize, 0usize, f64::INFINITY);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let thr = scores[order[i]];
        while i < order.len() && scores[order[i]] == thr {
            if labels[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // thresholds only decrease, so equal J and TPR favour this candidate
        let better = match scaled(tp, fp).cmp(&scaled(best_tp, best_fp)) {
            Ordering::Greater => true,
            Ordering::Equal => tp >= best_tp,
            Ordering::Less => false,
        };
        if better {
            (best_tp, best_fp, best_thr) = (tp, fp, thr);
        }
    }
    let tpr = best_tp as f64 / pos as f64;
    let fpr = best_fp as f64 / neg as f64;
    Ok(YoudenPoint { threshold: best_thr, j: tpr - fpr, tpr, fpr })
}

/// Threshold-dependent metrics against ground truth. `None` marks a
/// component that is not applicable (no samples of that kind).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub recall_reported: Option<f64>,
    pub recall_noisy: Option<f64>,
    pub recall_overall: Option<f64>,
    pub precision: Option<f64>,
    /// `recall^2 / P(predicted positive)`; 0 when nothing is predicted positive.
    pub pu_gmean: f64,
    pub predicted_positive: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classification_metrics(
    predictions: &[bool],
    truth: &[Truth],
) -> Result<ClassificationMetrics, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch { left: predictions.len(), right: truth.len() });
    }
    let (mut rep, mut rep_hit, mut noisy, mut noisy_hit, mut pred, mut tp) = (0, 0, 0, 0, 0, 0);
    for (&p, &t) in predictions.iter().zip(truth) {
        if p {
            pred += 1;
        }
        match t {
            Truth::Reported => {
                rep += 1;
                rep_hit += usize::from(p);
            }
            Truth::Silent | Truth::Latent => {
                noisy += 1;
                noisy_hit += usize::from(p);
            }
            Truth::CleanUnknown => {}
        }
        if p && t.is_vulnerable() {
            tp += 1;
        }
    }
    let recall_overall = ratio(rep_hit + noisy_hit, rep + noisy);
    let pu_gmean = match (recall_overall, pred) {
        (Some(r), p) if p > 0 => r * r / (p as f64 / predictions.len() as f64),
        _ => 0.0,
    };
    Ok(ClassificationMetrics {
        recall_reported: ratio(rep_hit, rep),
        recall_noisy: ratio(noisy_hit, noisy),
        recall_overall,
        precision: ratio(tp, pred),
        pu_gmean,
        predicted_positive: pred,
    })
}
