//! Evaluation: metrics, significance tests, hyperparameter search and the
//! next-release validation harness.

mod harness;
mod methods;
mod metrics;
mod report;
mod stats;
mod tune;

pub use harness::{
    fold_plan, next_release_validate, next_release_validate_with, CorpusTruth, FoldPlan, HarnessOptions,
    ThresholdSource, TruthOracle,
};
pub use methods::{fit_and_score, Method, MethodConfig, ParseMethodError, DEFAULT_MIN_LEAF};
pub use metrics::{auc, classification_metrics, youden_threshold, ClassificationMetrics, YoudenPoint};
pub use report::{Comparison, EvalReport, FoldResult, MethodSummary, FOLDS_CSV_HEADER};
pub use stats::{
    chi_square_gof, chi_square_sf, gamma_q, kruskal_wallis, midranks, wilcoxon_signed_rank, TestResult,
    WilcoxonResult, WILCOXON_EXACT_MAX_N,
};
pub use tune::{default_config, sample_config, tune, TuneOutcome, DEFAULT_BUDGET};

use thiserror::Error;

use crate::forest::ForestError;
use crate::nll::NllError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("expected count in cell {0} is not positive")]
    ZeroExpected(usize),
    #[error("need at least 2 categories, got {0}")]
    TooFewCategories(usize),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("need at least 3 releases, got {0}")]
    TooFewReleases(usize),
    #[error("tuning budget must be at least 1")]
    InvalidBudget,
    #[error("no configuration of {method} could be fitted on release {release}: {last_error}")]
    NoViableConfig { method: String, release: u32, last_error: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Nll(#[from] NllError),
}
