//! Noisy-label cleaning for positive/unlabeled training data.
//!
//! Every selector issues [`NoiseVerdict`]s for unlabeled samples only; the
//! positives are trusted. Verdicts are then turned into a training set by
//! pruning, flipping or relabeling.

mod calibrate;
mod confident;
mod reliable;

pub use calibrate::{elkan_noto_calibrate, holdout_positives, CalibratedModel, DEFAULT_HOLDOUT_FRACTION};
pub use confident::{
    confident_learning_select, out_of_fold_probabilities, select_from_probabilities, ConfidentOptions,
    RankAnchor,
};
pub use reliable::{select_reliable_negatives, two_stage_relabel};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sample;
use crate::forest::ForestError;
use crate::Matrix;

#[derive(Debug, Error)]
pub enum NllError {
    #[error("need at least {needed} positive and {needed} unlabeled samples, got {positives} and {unlabeled}")]
    TooFewSamples { needed: usize, positives: usize, unlabeled: usize },
    #[error("centroid of the {0} set has zero norm")]
    DegenerateCentroid(&'static str),
    #[error("no reliable negatives were selected")]
    NoReliableNegatives,
    #[error("verdict issued for positive sample {0:?}")]
    VerdictForPositive(String),
    #[error("verdict for unknown sample {0:?}")]
    UnknownSample(String),
    #[error("holdout set is empty")]
    EmptyHoldout,
    #[error("mean holdout score is zero")]
    ZeroPropensity,
    #[error("holdout score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    ReliableNegative,
    SuspectedVulnerable,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::ReliableNegative => "reliable_negative",
            Decision::SuspectedVulnerable => "suspected_vulnerable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseVerdict {
    pub sample_id: String,
    pub decision: Decision,
    /// Method-specific confidence.
    pub score: f64,
}

impl NoiseVerdict {
    pub fn is_suspected(&self) -> bool {
        self.decision == Decision::SuspectedVulnerable
    }
}

/// Training data as a learner sees it: ids, features and binary labels
/// (1 = positive, 0 = unlabeled/negative).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(ids: Vec<String>, features: Matrix, labels: Vec<u8>) -> Self {
        assert_eq!(ids.len(), features.rows(), "ids/features length mismatch");
        assert_eq!(labels.len(), features.rows(), "labels/features length mismatch");
        Self { ids, features, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    fn subset(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyMode {
    /// Drop suspected samples.
    Prune,
    /// Relabel suspected samples as positive.
    Flip,
}

/// Turn verdicts into a training set. Samples without a verdict are kept as is.
pub fn apply_verdicts(dataset: &Dataset, verdicts: &[NoiseVerdict], mode: ApplyMode) -> Result<Dataset, NllError> {
    let index = dataset.index();
    let mut suspected = vec![false; dataset.len()];
    for v in verdicts {
        let &row = index.get(v.sample_id.as_str()).ok_or_else(|| NllError::UnknownSample(v.sample_id.clone()))?;
        if dataset.labels[row] != 0 {
            return Err(NllError::VerdictForPositive(v.sample_id.clone()));
        }
        suspected[row] = v.is_suspected();
    }
    Ok(match mode {
        ApplyMode::Prune => {
            let keep: Vec<usize> = (0..dataset.len()).filter(|&i| !suspected[i]).collect();
            dataset.subset(&keep)
        }
        ApplyMode::Flip => {
            let mut out = dataset.clone();
            for (l, s) in out.labels.iter_mut().zip(&suspected) {
                if *s {
                    *l = 1;
                }
            }
            out
        }
    })
}

/// Oracle labels: 1 for every vulnerable sample, reported or hidden.
pub fn semi_optimal_relabel(samples: &[Sample]) -> Vec<u8> {
    samples.iter().map(|s| u8::from(s.truth.is_vulnerable())).collect()
}
