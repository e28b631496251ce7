//! Reliable-negative selection by nearest cosine centroid, and the two-stage
//! relabeling built on it.

use super::{Dataset, Decision, NllError, NoiseVerdict};
use crate::forest::{fit_forest, ForestConfig};
use crate::matrix::{cosine_distance, norm};

/// Mean of the L2-normalised rows selected by `keep`.
fn direction_centroid(dataset: &Dataset, keep: impl Fn(u8) -> bool) -> Vec<f64> {
    let d = dataset.features.cols();
    let mut c = vec![0.0; d];
    let mut n = 0usize;
    for (row, &l) in dataset.features.iter_rows().zip(&dataset.labels) {
        if !keep(l) {
            continue;
        }
        n += 1;
        let len = norm(row);
        if len > 0.0 {
            for (acc, v) in c.iter_mut().zip(row) {
                *acc += v / len;
            }
        }
    }
    c.iter_mut().for_each(|v| *v /= n as f64);
    c
}

/// An unlabeled sample is a reliable negative iff it is closer (cosine) to
/// the unlabeled centroid than to the positive centroid by more than
/// `margin`, otherwise suspected. The verdict score is `d_pos - d_unl`.
///
/// Rows are normalised before averaging, which keeps verdicts invariant to
/// rescaling individual samples.
pub fn select_reliable_negatives(dataset: &Dataset, margin: f64) -> Result<Vec<NoiseVerdict>, NllError> {
    let positives = dataset.positives();
    let unlabeled = dataset.len() - positives;
    if positives == 0 || unlabeled == 0 {
        return Err(NllError::TooFewSamples { needed: 1, positives, unlabeled });
    }
    let pos_c = direction_centroid(dataset, |l| l != 0);
    let unl_c = direction_centroid(dataset, |l| l == 0);
    if norm(&pos_c) == 0.0 {
        return Err(NllError::DegenerateCentroid("positive"));
    }
    if norm(&unl_c) == 0.0 {
        return Err(NllError::DegenerateCentroid("unlabeled"));
    }
    Ok(dataset
        .features
        .iter_rows()
        .zip(&dataset.labels)
        .zip(&dataset.ids)
        .filter(|((_, &l), _)| l == 0)
        .map(|((row, _), id)| {
            let d_pos = cosine_distance(row, &pos_c);
            let d_unl = cosine_distance(row, &unl_c);
            let decision = if d_unl + margin < d_pos {
                Decision::ReliableNegative
            } else {
                Decision::SuspectedVulnerable
            };
            NoiseVerdict { sample_id: id.clone(), decision, score: d_pos - d_unl }
        })
        .collect())
}

/// Fit a forest on positives plus reliable negatives and let it label the
/// suspected samples at 0.5. Returns labels for every row of `dataset`.
pub fn two_stage_relabel(
    dataset: &Dataset,
    verdicts: &[NoiseVerdict],
    config: &ForestConfig,
    seed: u64,
) -> Result<Vec<u8>, NllError> {
    let index = dataset.index();
    let mut suspected = vec![false; dataset.len()];
    let mut any_reliable = false;
    for v in verdicts {
        let &row = index.get(v.sample_id.as_str()).ok_or_else(|| NllError::UnknownSample(v.sample_id.clone()))?;
        if dataset.labels[row] != 0 {
            return Err(NllError::VerdictForPositive(v.sample_id.clone()));
        }
        suspected[row] = v.is_suspected();
        any_reliable |= !v.is_suspected();
    }
    if !any_reliable {
        return Err(NllError::NoReliableNegatives);
    }
    let mut labels = dataset.labels.clone();
    let stage_one: Vec<usize> = (0..dataset.len()).filter(|&i| !suspected[i]).collect();
    let pending: Vec<usize> = (0..dataset.len()).filter(|&i| suspected[i]).collect();
    if pending.is_empty() {
        return Ok(labels);
    }
    let y: Vec<u8> = stage_one.iter().map(|&i| dataset.labels[i]).collect();
    let forest = fit_forest(&dataset.features.select_rows(&stage_one), &y, None, &config.with_seed(seed))?;
    let p = forest.predict_proba(&dataset.features.select_rows(&pending))?;
    for (&i, p) in pending.iter().zip(p) {
        labels[i] = u8::from(p >= 0.5);
    }
    Ok(labels)
}
