//! Prediction methods compared by the harness. Each one trains on a single
//! release and scores arbitrary rows; higher scores mean more likely
//! vulnerable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EvalError;
use crate::forest::{
    fit_forest, random_oversample, ClassWeighting, ForestConfig, OneClassScorer, DEFAULT_ONE_CLASS_K,
};
use crate::nll::{
    apply_verdicts, confident_learning_select, elkan_noto_calibrate, holdout_positives,
    select_reliable_negatives, two_stage_relabel, ApplyMode, ConfidentOptions, Dataset,
    DEFAULT_HOLDOUT_FRACTION,
};
use crate::seed;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "baseline-ros")]
    BaselineRos,
    #[serde(rename = "one-class")]
    OneClass,
    #[serde(rename = "cl")]
    ConfidentLearning,
    #[serde(rename = "cl-plus")]
    ConfidentLearningPlus,
    #[serde(rename = "post")]
    PostProcessing,
    #[serde(rename = "one-stage")]
    OneStage,
    #[serde(rename = "two-stage")]
    TwoStage,
    #[serde(rename = "semi-optimal")]
    SemiOptimal,
}

#[derive(Debug, Error)]
#[error("unknown method {0:?}")]
pub struct ParseMethodError(pub String);

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Baseline,
        Method::BaselineRos,
        Method::OneClass,
        Method::ConfidentLearning,
        Method::ConfidentLearningPlus,
        Method::PostProcessing,
        Method::OneStage,
        Method::TwoStage,
        Method::SemiOptimal,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::BaselineRos => "baseline-ros",
            Method::OneClass => "one-class",
            Method::ConfidentLearning => "cl",
            Method::ConfidentLearningPlus => "cl-plus",
            Method::PostProcessing => "post",
            Method::OneStage => "one-stage",
            Method::TwoStage => "two-stage",
            Method::SemiOptimal => "semi-optimal",
        }
    }

    /// Human-readable name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::Baseline => "Baseline",
            Method::BaselineRos => "Baseline (Resampling)",
            Method::OneClass => "One-class (kNN)",
            Method::ConfidentLearning => "Confident Learning",
            Method::ConfidentLearningPlus => "Confident Learning +",
            Method::PostProcessing => "Post-Processing",
            Method::OneStage => "1-Stage Learning",
            Method::TwoStage => "2-Stage Learning",
            Method::SemiOptimal => "Semi-Optimal",
        }
    }

    /// Only the oracle method trains on ground-truth annotations.
    pub fn uses_truth(self) -> bool {
        self == Method::SemiOptimal
    }

    pub fn class_weighting(self) -> ClassWeighting {
        match self {
            Method::BaselineRos | Method::PostProcessing => ClassWeighting::None,
            _ => ClassWeighting::Balanced,
        }
    }

    pub fn uses_forest(self) -> bool {
        self != Method::OneClass
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = ParseMethodError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| ParseMethodError(s.to_string()))
    }
}

/// One point of a method's search space. Fields a method does not use are
/// carried along unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub forest: ForestConfig,
    /// Confident learning: share of unlabeled samples to flag; `None` estimates it.
    pub ratio: Option<f64>,
    /// Reliable-negative distance margin.
    pub margin: f64,
    /// One-class neighbours.
    pub k: usize,
}

/// Leaf size of the untuned configuration. Leaves of a handful of samples
/// keep forest probabilities smooth enough for the 0.5 relabel cut.
pub const DEFAULT_MIN_LEAF: usize = 8;

impl MethodConfig {
    pub fn defaults_for(method: Method) -> Self {
        Self {
            forest: ForestConfig { min_samples_leaf: DEFAULT_MIN_LEAF, ..ForestConfig::default() }
                .with_weighting(method.class_weighting()),
            ratio: None,
            margin: 0.0,
            k: DEFAULT_ONE_CLASS_K,
        }
    }
}

fn forest_scores(train: &Dataset, labels: &[u8], cfg: &ForestConfig, seed: u64, query: &Matrix) -> Result<Vec<f64>, EvalError> {
    let forest = fit_forest(&train.features, labels, None, &cfg.with_seed(seed))?;
    Ok(forest.predict_proba(query)?)
}

/// Train `method` on `train` and score every row of `query`.
///
/// `train.labels` are the labels the method may learn from: the observed
/// positive/unlabeled labels, or the oracle labels for the semi-optimal run.
pub fn fit_and_score(
    method: Method,
    cfg: &MethodConfig,
    train: &Dataset,
    query: &Matrix,
    seed: u64,
) -> Result<Vec<f64>, EvalError> {
    let forest_cfg = cfg.forest.with_weighting(method.class_weighting());
    let fit_seed = seed::derive(seed, "final-forest", 0);
    match method {
        Method::Baseline | Method::SemiOptimal => forest_scores(train, &train.labels, &forest_cfg, fit_seed, query),
        Method::BaselineRos => {
            let (x, y) = random_oversample(&train.features, &train.labels, seed::derive(seed, "ros", 0))?;
            let forest = fit_forest(&x, &y, None, &forest_cfg.with_seed(fit_seed))?;
            Ok(forest.predict_proba(query)?)
        }
        Method::OneClass => {
            let pos: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] != 0).collect();
            let scorer = OneClassScorer::new(&train.features.select_rows(&pos), cfg.k)?;
            Ok(scorer.score_all(query)?)
        }
        Method::ConfidentLearning | Method::ConfidentLearningPlus => {
            let options = ConfidentOptions { ratio_override: cfg.ratio, ..Default::default() };
            let verdicts = confident_learning_select(train, &forest_cfg, &options, seed::derive(seed, "cl", 0))?;
            let mode = if method == Method::ConfidentLearning { ApplyMode::Prune } else { ApplyMode::Flip };
            let cleaned = apply_verdicts(train, &verdicts, mode)?;
            forest_scores(&cleaned, &cleaned.labels, &forest_cfg, fit_seed, query)
        }
        Method::PostProcessing => {
            let held = holdout_positives(&train.labels, DEFAULT_HOLDOUT_FRACTION, seed::derive(seed, "holdout", 0))?;
            let mut is_held = vec![false; train.len()];
            held.iter().for_each(|&i| is_held[i] = true);
            let rest: Vec<usize> = (0..train.len()).filter(|&i| !is_held[i]).collect();
            let y: Vec<u8> = rest.iter().map(|&i| train.labels[i]).collect();
            let forest = fit_forest(&train.features.select_rows(&rest), &y, None, &forest_cfg.with_seed(fit_seed))?;
            let holdout_scores = forest.predict_proba(&train.features.select_rows(&held))?;
            let model = elkan_noto_calibrate(&holdout_scores)?;
            Ok(model.calibrate_all(&forest.predict_proba(query)?))
        }
        Method::OneStage => {
            let verdicts = select_reliable_negatives(train, cfg.margin)?;
            let cleaned = apply_verdicts(train, &verdicts, ApplyMode::Prune)?;
            forest_scores(&cleaned, &cleaned.labels, &forest_cfg, fit_seed, query)
        }
        Method::TwoStage => {
            let verdicts = select_reliable_negatives(train, cfg.margin)?;
            let labels = two_stage_relabel(train, &verdicts, &forest_cfg, seed::derive(seed, "stage-two", 0))?;
            forest_scores(train, &labels, &forest_cfg, fit_seed, query)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.id()));
        }
        assert!("nosuch".parse::<Method>().is_err());
    }

    #[test]
    fn only_semi_optimal_sees_truth() {
        assert_eq!(Method::ALL.iter().filter(|m| m.uses_truth()).count(), 1);
    }
}
