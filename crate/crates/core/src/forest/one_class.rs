//! kNN cosine novelty scorer trained on reported positives only.

use super::ForestError;
use crate::matrix::{dot, norm};
use crate::Matrix;

pub const DEFAULT_ONE_CLASS_K: usize = 5;

/// Scores queries by `-mean cosine distance` to their `k` nearest training
/// positives; 0 is the maximum. Zero vectors sit at distance 1 from anything.
#[derive(Debug, Clone)]
pub struct OneClassScorer {
    positives: Matrix,
    norms: Vec<f64>,
    k: usize,
}

impl OneClassScorer {
    pub fn new(train_positives: &Matrix, k: usize) -> Result<Self, ForestError> {
        if train_positives.rows() == 0 {
            return Err(ForestError::NoPositives);
        }
        if k == 0 {
            return Err(ForestError::InvalidConfig("k must be at least 1".into()));
        }
        let norms = train_positives.iter_rows().map(norm).collect();
        Ok(Self { positives: train_positives.clone(), norms, k: k.min(train_positives.rows()) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn score(&self, query: &[f64]) -> Result<f64, ForestError> {
        if query.len() != self.positives.cols() {
            return Err(ForestError::DimensionMismatch { expected: self.positives.cols(), found: query.len() });
        }
        let qn = norm(query);
        let mut dists: Vec<f64> = self
            .positives
            .iter_rows()
            .zip(&self.norms)
            .map(|(p, &pn)| if qn == 0.0 || pn == 0.0 { 1.0 } else { 1.0 - dot(p, query) / (pn * qn) })
            .collect();
        dists.sort_by(f64::total_cmp);
        let mean = dists[..self.k].iter().sum::<f64>() / self.k as f64;
        Ok(-mean)
    }

    pub fn score_all(&self, queries: &Matrix) -> Result<Vec<f64>, ForestError> {
        queries.iter_rows().map(|q| self.score(q)).collect()
    }
}

pub fn one_class_score(train_positives: &Matrix, query: &[f64], k: usize) -> Result<f64, ForestError> {
    OneClassScorer::new(train_positives, k)?.score(query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_query_scores_zero() {
        let pos = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(one_class_score(&pos, &[1.0, 2.0], 1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn orthogonal_query_scores_minus_one() {
        let pos = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!((one_class_score(&pos, &[0.0, 1.0], 1).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_is_clamped() {
        let pos = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let big = one_class_score(&pos, &[1.0, 0.0], 50).unwrap();
        let exact = one_class_score(&pos, &[1.0, 0.0], 2).unwrap();
        assert_eq!(big, exact);
        assert!((big + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_query_uses_unit_distance() {
        let pos = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(one_class_score(&pos, &[0.0, 0.0], 1).unwrap(), -1.0);
    }

    #[test]
    fn empty_training_set_rejected() {
        assert!(OneClassScorer::new(&Matrix::empty(2), 1).is_err());
    }
}
