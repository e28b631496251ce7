//! Random hyperparameter search scored by validation AUC.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::methods::{fit_and_score, Method, MethodConfig};
use super::metrics::auc;
use super::EvalError;
use crate::forest::{ForestConfig, MaxFeatures};
use crate::nll::Dataset;
use crate::seed::{self, Rng};
use crate::Matrix;

pub const DEFAULT_BUDGET: usize = 30;

const N_TREES: [usize; 2] = [100, 200];
const MAX_DEPTH: [Option<usize>; 3] = [None, Some(8), Some(12)];
const MIN_LEAF: [usize; 3] = [4, 8, 16];
const MAX_FEATURES: [MaxFeatures; 2] = [MaxFeatures::Sqrt, MaxFeatures::Fraction(0.5)];
const MARGINS: [f64; 5] = [-0.05, 0.0, 0.05, 0.1, 0.2];
const NEIGHBOURS: [usize; 5] = [1, 3, 5, 10, 20];
/// Largest flagged share tried when the confident-learning count is overridden.
const MAX_RATIO: f64 = 0.1;

pub fn default_config(method: Method) -> MethodConfig {
    MethodConfig::defaults_for(method)
}

fn pick<T: Copy>(rng: &mut Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

/// Draw one configuration. Every field is drawn whatever the method, so two
/// methods sharing a seed walk through the same forest settings.
pub fn sample_config(method: Method, rng: &mut Rng) -> MethodConfig {
    let forest = ForestConfig {
        n_trees: pick(rng, &N_TREES),
        max_depth: pick(rng, &MAX_DEPTH),
        min_samples_leaf: pick(rng, &MIN_LEAF),
        max_features: pick(rng, &MAX_FEATURES),
        ..ForestConfig::default()
    }
    .with_weighting(method.class_weighting());
    let estimate = rng.random_bool(0.25);
    let share = rng.random_range(0.0..MAX_RATIO);
    MethodConfig {
        forest,
        ratio: (!estimate).then_some(share),
        margin: pick(rng, &MARGINS),
        k: pick(rng, &NEIGHBOURS),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub config: MethodConfig,
    /// `None` when validation could not rank configurations.
    pub validation_auc: Option<f64>,
    pub trials: usize,
    pub failed_trials: usize,
}

/// Evaluate `budget` configurations on the validation release and keep the
/// best. Trial 0 is the default configuration; later trials are random.
/// Ties keep the earlier trial. Trials whose training fails are skipped.
pub fn tune(
    method: Method,
    train: &Dataset,
    validation: &Matrix,
    validation_labels: &[u8],
    budget: usize,
    seed: u64,
) -> Result<TuneOutcome, EvalError> {
    if budget == 0 {
        return Err(EvalError::InvalidBudget);
    }
    let has_both = validation_labels.iter().any(|&l| l != 0) && validation_labels.contains(&0);
    if !has_both {
        return Ok(TuneOutcome { config: default_config(method), validation_auc: None, trials: 0, failed_trials: 0 });
    }
    let mut rng = seed::derived_rng(seed, "search", 0);
    let mut best: Option<(MethodConfig, f64)> = None;
    let mut failed = 0;
    let mut last_error = String::new();
    for trial in 0..budget {
        let config = if trial == 0 { default_config(method) } else { sample_config(method, &mut rng) };
        let trial_seed = seed::derive(seed, "trial", trial as u64);
        let scored = fit_and_score(method, &config, train, validation, trial_seed)
            .and_then(|scores| auc(&scores, validation_labels));
        match scored {
            Ok(value) => {
                if best.is_none_or(|(_, b)| value > b) {
                    best = Some((config, value));
                }
            }
            Err(e) => {
                failed += 1;
                last_error = e.to_string();
            }
        }
    }
    match best {
        Some((config, value)) => {
            Ok(TuneOutcome { config, validation_auc: Some(value), trials: budget, failed_trials: failed })
        }
        None => Err(EvalError::NoViableConfig { method: method.id().to_string(), release: 0, last_error }),
    }
}
