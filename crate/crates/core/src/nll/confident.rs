//! Confident learning over out-of-fold forest probabilities.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, Decision, NllError, NoiseVerdict};
use crate::forest::{fit_forest, ForestConfig};
use crate::seed;
use crate::Matrix;

/// Statistic used to rank unlabeled samples once the noise count is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankAnchor {
    /// `p - mean_unlabeled(p)`, largest first: the most positive-looking samples.
    #[default]
    PositiveExcess,
    /// `|p - mean_unlabeled(p)|`, largest first, in either direction.
    AbsoluteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidentOptions {
    pub folds: usize,
    /// Fraction of unlabeled samples to flag, replacing the estimated count.
    pub ratio_override: Option<f64>,
    pub anchor: RankAnchor,
}

impl Default for ConfidentOptions {
    fn default() -> Self {
        Self { folds: 5, ratio_override: None, anchor: RankAnchor::PositiveExcess }
    }
}

/// Stratified k-fold probabilities: every sample is scored by a forest that
/// never saw it.
pub fn out_of_fold_probabilities(
    features: &Matrix,
    labels: &[u8],
    config: &ForestConfig,
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>, NllError> {
    if folds < 2 {
        return Err(NllError::InvalidOption(format!("folds must be at least 2, got {folds}")));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    let mut unl: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.len() < folds || unl.len() < folds {
        return Err(NllError::TooFewSamples { needed: folds, positives: pos.len(), unlabeled: unl.len() });
    }
    let mut rng = seed::derived_rng(seed, "cl-folds", 0);
    pos.shuffle(&mut rng);
    unl.shuffle(&mut rng);
    let mut fold_of = vec![0usize; labels.len()];
    for (k, &i) in pos.iter().enumerate() {
        fold_of[i] = k % folds;
    }
    for (k, &i) in unl.iter().enumerate() {
        fold_of[i] = k % folds;
    }

    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
            let held: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
            let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let cfg = config.with_seed(seed::derive(seed, "cl-fold-forest", f as u64));
            let forest = fit_forest(&features.select_rows(&train), &y, None, &cfg)?;
            let p = forest.predict_proba(&features.select_rows(&held))?;
            Ok((held, p))
        })
        .collect::<Result<_, NllError>>()?;

    let mut probs = vec![0.0; labels.len()];
    for (held, p) in per_fold {
        for (i, v) in held.into_iter().zip(p) {
            probs[i] = v;
        }
    }
    Ok(probs)
}

/// Count and rank rules applied to given probabilities. The noise count is
/// the number of unlabeled samples whose probability exceeds the positive
/// mean, unless `ratio_override` fixes it as a share of the unlabeled set.
pub fn select_from_probabilities(
    ids: &[String],
    probs: &[f64],
    labels: &[u8],
    ratio_override: Option<f64>,
    anchor: RankAnchor,
) -> Result<Vec<NoiseVerdict>, NllError> {
    let unl: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    if unl.is_empty() || pos.is_empty() {
        return Err(NllError::TooFewSamples { needed: 1, positives: pos.len(), unlabeled: unl.len() });
    }
    let mean = |rows: &[usize]| rows.iter().map(|&i| probs[i]).sum::<f64>() / rows.len() as f64;
    let pos_mean = mean(&pos);
    let unl_mean = mean(&unl);

    let k = match ratio_override {
        Some(r) if !(0.0..=1.0).contains(&r) => {
            return Err(NllError::InvalidOption(format!("ratio_override {r} not in [0, 1]")))
        }
        Some(r) => (r * unl.len() as f64).round() as usize,
        None => unl.iter().filter(|&&i| probs[i] > pos_mean).count(),
    };

    let score = |i: usize| match anchor {
        RankAnchor::PositiveExcess => probs[i] - unl_mean,
        RankAnchor::AbsoluteDifference => (probs[i] - unl_mean).abs(),
    };
    let mut ranked = unl.clone();
    ranked.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    let mut suspected = vec![false; labels.len()];
    for &i in ranked.iter().take(k) {
        suspected[i] = true;
    }
    Ok(unl
        .into_iter()
        .map(|i| NoiseVerdict {
            sample_id: ids[i].clone(),
            decision: if suspected[i] { Decision::SuspectedVulnerable } else { Decision::ReliableNegative },
            score: score(i),
        })
        .collect())
}

pub fn confident_learning_select(
    dataset: &Dataset,
    config: &ForestConfig,
    options: &ConfidentOptions,
    seed: u64,
) -> Result<Vec<NoiseVerdict>, NllError> {
    let probs = out_of_fold_probabilities(&dataset.features, &dataset.labels, config, options.folds, seed)?;
    select_from_probabilities(&dataset.ids, &probs, &dataset.labels, options.ratio_override, options.anchor)
}
