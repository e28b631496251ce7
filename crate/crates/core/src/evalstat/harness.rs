//! Next-release validation: train on release `x-2`, tune on `x-1`, test on
//! `x`, for every release position `x >= 2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::methods::{fit_and_score, Method};
use super::metrics::{auc, classification_metrics, youden_threshold};
use super::report::{EvalReport, FoldResult};
use super::tune::{tune, DEFAULT_BUDGET};
use super::EvalError;
use crate::corpus::{Corpus, Release, Truth};
use crate::nll::Dataset;
use crate::seed;

/// Source of ground truth. The harness only asks for test rows, plus train
/// and validation rows when the semi-optimal method runs.
pub trait TruthOracle: Sync {
    fn truth(&self, release_pos: usize, row: usize) -> Truth;
}

pub struct CorpusTruth<'a>(pub &'a Corpus);

impl TruthOracle for CorpusTruth<'_> {
    fn truth(&self, release_pos: usize, row: usize) -> Truth {
        self.0.releases()[release_pos].samples[row].truth
    }
}

/// Release positions (indices into the corpus's release list) of one fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

pub fn fold_plan(releases: usize) -> Result<Vec<FoldPlan>, EvalError> {
    if releases < 3 {
        return Err(EvalError::TooFewReleases(releases));
    }
    Ok((2..releases).map(|x| FoldPlan { train: x - 2, validation: x - 1, test: x }).collect())
}

/// Where the decision threshold for threshold-dependent metrics comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ThresholdSource {
    /// Youden point of the test ROC against ground truth.
    #[default]
    TestRoc,
    /// Youden point of the validation ROC against the tuning labels.
    ValidationRoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub methods: Vec<Method>,
    pub budget: usize,
    pub seed: u64,
    pub threshold: ThresholdSource,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec(), budget: DEFAULT_BUDGET, seed: 0, threshold: ThresholdSource::TestRoc }
    }
}

pub fn next_release_validate(corpus: &Corpus, options: &HarnessOptions) -> Result<EvalReport, EvalError> {
    next_release_validate_with(corpus, &CorpusTruth(corpus), options)
}

fn truth_labels(oracle: &dyn TruthOracle, pos: usize, rows: usize) -> Vec<u8> {
    (0..rows).map(|r| u8::from(oracle.truth(pos, r).is_vulnerable())).collect()
}

fn dataset(release: &Release, dim: usize, labels: Vec<u8>) -> Dataset {
    Dataset::new(release.ids(), release.feature_matrix(dim), labels)
}

pub fn next_release_validate_with(
    corpus: &Corpus,
    oracle: &dyn TruthOracle,
    options: &HarnessOptions,
) -> Result<EvalReport, EvalError> {
    if options.budget == 0 {
        return Err(EvalError::InvalidBudget);
    }
    let plans = fold_plan(corpus.releases().len())?;
    let jobs: Vec<(FoldPlan, Method)> =
        plans.iter().flat_map(|&p| options.methods.iter().map(move |&m| (p, m))).collect();
    let folds = jobs
        .par_iter()
        .map(|&(plan, method)| run_fold(corpus, oracle, options, plan, method))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_folds(options.seed, options.budget, folds))
}

fn run_fold(
    corpus: &Corpus,
    oracle: &dyn TruthOracle,
    options: &HarnessOptions,
    plan: FoldPlan,
    method: Method,
) -> Result<FoldResult, EvalError> {
    let dim = corpus.dimension();
    let releases = corpus.releases();
    let (train_rel, val_rel, test_rel) = (&releases[plan.train], &releases[plan.validation], &releases[plan.test]);
    let (train_labels, val_labels) = if method.uses_truth() {
        (truth_labels(oracle, plan.train, train_rel.len()), truth_labels(oracle, plan.validation, val_rel.len()))
    } else {
        (train_rel.observed_labels(), val_rel.observed_labels())
    };
    let train = dataset(train_rel, dim, train_labels);
    let val_x = val_rel.feature_matrix(dim);
    let fold_seed = seed::derive(options.seed, "fold", test_rel.index as u64);

    let outcome = tune(method, &train, &val_x, &val_labels, options.budget, fold_seed).map_err(|e| match e {
        EvalError::NoViableConfig { method, last_error, .. } => {
            EvalError::NoViableConfig { method, release: test_rel.index, last_error }
        }
        other => other,
    })?;

    let test_x = test_rel.feature_matrix(dim);
    let final_seed = seed::derive(fold_seed, "final", 0);
    let test_truth: Vec<Truth> = (0..test_rel.len()).map(|r| oracle.truth(plan.test, r)).collect();
    let test_labels: Vec<u8> = test_truth.iter().map(|t| u8::from(t.is_vulnerable())).collect();

    let (test_scores, threshold) = match options.threshold {
        ThresholdSource::TestRoc => {
            let scores = fit_and_score(method, &outcome.config, &train, &test_x, final_seed)?;
            let point = youden_threshold(&scores, &test_labels)?;
            (scores, point.threshold)
        }
        ThresholdSource::ValidationRoc => {
            let mut query = val_x.clone();
            for row in test_x.iter_rows() {
                query.push_row(row);
            }
            let mut scores = fit_and_score(method, &outcome.config, &train, &query, final_seed)?;
            let test_scores = scores.split_off(val_x.rows());
            let threshold = youden_threshold(&scores, &val_labels).map_or(0.5, |p| p.threshold);
            (test_scores, threshold)
        }
    };
    let test_auc = auc(&test_scores, &test_labels)?;
    let predictions: Vec<bool> = test_scores.iter().map(|&s| s >= threshold).collect();
    let m = classification_metrics(&predictions, &test_truth)?;
    Ok(FoldResult {
        test_release: test_rel.index,
        method,
        auc: test_auc,
        threshold,
        recall_reported: m.recall_reported,
        recall_noisy: m.recall_noisy,
        recall_overall: m.recall_overall,
        precision: m.precision,
        pu_gmean: m.pu_gmean,
        predicted_positives: m.predicted_positive,
        validation_auc: outcome.validation_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_covers_every_release_from_the_third() {
        let plan = fold_plan(5).unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan[0], FoldPlan { train: 0, validation: 1, test: 2 });
        assert_eq!(plan[2], FoldPlan { train: 2, validation: 3, test: 4 });
        assert!(matches!(fold_plan(2), Err(EvalError::TooFewReleases(2))));
    }
}
