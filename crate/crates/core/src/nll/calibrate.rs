//! Elkan-Noto post-processing: rescale scores by the mean score a held-out
//! set of labeled positives receives.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::NllError;
use crate::seed;

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    /// Estimated labeling propensity, in (0, 1].
    pub c: f64,
}

impl CalibratedModel {
    /// `min(1, raw / c)`.
    pub fn calibrate(&self, raw: f64) -> f64 {
        (raw / self.c).min(1.0)
    }

    pub fn calibrate_all(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|&r| self.calibrate(r)).collect()
    }
}

pub fn elkan_noto_calibrate(holdout_scores: &[f64]) -> Result<CalibratedModel, NllError> {
    if holdout_scores.is_empty() {
        return Err(NllError::EmptyHoldout);
    }
    if let Some(&bad) = holdout_scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(NllError::ScoreOutOfRange(bad));
    }
    let c = holdout_scores.iter().sum::<f64>() / holdout_scores.len() as f64;
    if c <= 0.0 {
        return Err(NllError::ZeroPropensity);
    }
    Ok(CalibratedModel { c: c.min(1.0) })
}

/// Seeded choice of `fraction` of the positive rows (at least one, never all).
pub fn holdout_positives(labels: &[u8], fraction: f64, seed: u64) -> Result<Vec<usize>, NllError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(NllError::InvalidOption(format!("holdout fraction {fraction} not in (0, 1)")));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    if pos.len() < 2 {
        return Err(NllError::TooFewSamples {
            needed: 2,
            positives: pos.len(),
            unlabeled: labels.len() - pos.len(),
        });
    }
    let take = ((fraction * pos.len() as f64).round() as usize).clamp(1, pos.len() - 1);
    pos.shuffle(&mut seed::derived_rng(seed, "holdout", 0));
    let mut held = pos[..take].to_vec();
    held.sort_unstable();
    Ok(held)
}
