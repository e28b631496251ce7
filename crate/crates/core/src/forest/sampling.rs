//! Class rebalancing: inverse-frequency weights and random oversampling.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::seed;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub fn of(&self, label: u8) -> f64 {
        if label != 0 {
            self.positive
        } else {
            self.negative
        }
    }

    pub fn per_sample(&self, labels: &[u8]) -> Vec<f64> {
        labels.iter().map(|&l| self.of(l)).collect()
    }
}

fn counts(labels: &[u8]) -> Result<(usize, usize), ForestError> {
    let pos = labels.iter().filter(|&&l| l != 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ForestError::SingleClass);
    }
    Ok((neg, pos))
}

/// `w_c = n / (2 n_c)`.
pub fn balanced_class_weights(labels: &[u8]) -> Result<ClassWeights, ForestError> {
    let (neg, pos) = counts(labels)?;
    let n = labels.len() as f64;
    Ok(ClassWeights { negative: n / (2.0 * neg as f64), positive: n / (2.0 * pos as f64) })
}

/// Append minority rows drawn with replacement until both classes have the
/// majority count. Original rows keep their order at the front.
pub fn random_oversample(
    features: &Matrix,
    labels: &[u8],
    seed: u64,
) -> Result<(Matrix, Vec<u8>), ForestError> {
    if features.rows() != labels.len() {
        return Err(ForestError::LengthMismatch { rows: features.rows(), labels: labels.len() });
    }
    let (neg, pos) = counts(labels)?;
    let minority_label = u8::from(pos < neg);
    let minority: Vec<usize> = (0..labels.len())
        .filter(|&i| u8::from(labels[i] != 0) == minority_label)
        .collect();
    let deficit = neg.abs_diff(pos);

    let mut rng = seed::derived_rng(seed, "oversample", 0);
    let mut out = features.clone();
    let mut out_labels = labels.to_vec();
    for _ in 0..deficit {
        let i = minority[rng.random_range(0..minority.len())];
        out.push_row(features.row(i));
        out_labels.push(labels[i]);
    }
    Ok((out, out_labels))
}
