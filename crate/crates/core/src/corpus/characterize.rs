//! Noise characterization: vulnerability types, latency and file locations of
//! hidden (silent/latent) positives compared with reported ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, Truth};
use crate::evalstat::{chi_square_gof, kruskal_wallis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizeOptions {
    /// Categories with fewer occurrences are left out of the significance tests.
    pub min_category_count: usize,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self { min_category_count: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruskalSummary {
    pub groups: Vec<String>,
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareSummary {
    pub categories: Vec<String>,
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseCharacterization {
    /// Vulnerable samples per type tag.
    pub type_frequency: BTreeMap<String, usize>,
    /// Mean latency in days of latent samples per type tag.
    pub mean_latency: BTreeMap<String, f64>,
    pub reported_locations: BTreeMap<String, f64>,
    pub noisy_locations: BTreeMap<String, f64>,
    /// Latency differs by type; `None` when not applicable.
    pub latency_by_type: Option<KruskalSummary>,
    /// Noisy location counts against reported proportions; `None` when not applicable.
    pub location_shift: Option<ChiSquareSummary>,
}

/// Top-level source folder of a path, `.` for files at the root.
fn location(path: &str) -> String {
    match path.split_once('/') {
        Some((head, _)) if !head.is_empty() => head.to_string(),
        _ => ".".to_string(),
    }
}

fn proportions(counts: &BTreeMap<String, usize>) -> BTreeMap<String, f64> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect()
}

pub fn characterize_noise(corpus: &Corpus) -> NoiseCharacterization {
    characterize_noise_with(corpus, CharacterizeOptions::default())
}

pub fn characterize_noise_with(corpus: &Corpus, opts: CharacterizeOptions) -> NoiseCharacterization {
    let mut type_frequency = BTreeMap::new();
    let mut latencies: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut reported_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut noisy_counts: BTreeMap<String, usize> = BTreeMap::new();

    for s in corpus.samples() {
        if !s.truth.is_vulnerable() {
            continue;
        }
        if let Some(tag) = &s.type_tag {
            *type_frequency.entry(tag.clone()).or_insert(0) += 1;
            if let (Truth::Latent, Some(days)) = (s.truth, s.latency_days) {
                latencies.entry(tag.clone()).or_default().push(f64::from(days));
            }
        }
        let loc = location(&s.path);
        if s.truth == Truth::Reported {
            *reported_counts.entry(loc).or_insert(0) += 1;
        } else {
            *noisy_counts.entry(loc).or_insert(0) += 1;
        }
    }

    let mean_latency = latencies
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().sum::<f64>() / v.len() as f64))
        .collect();

    let kept: Vec<(&String, &Vec<f64>)> = latencies
        .iter()
        .filter(|(_, v)| v.len() >= opts.min_category_count.max(1))
        .collect();
    let latency_by_type = if kept.len() >= 2 {
        let groups: Vec<Vec<f64>> = kept.iter().map(|(_, v)| (*v).clone()).collect();
        kruskal_wallis(&groups).ok().map(|t| KruskalSummary {
            groups: kept.iter().map(|(k, _)| (*k).clone()).collect(),
            h: t.statistic,
            df: t.df,
            p: t.p,
        })
    } else {
        None
    };

    let categories: Vec<&String> = reported_counts
        .keys()
        .chain(noisy_counts.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .filter(|k| {
            let r = reported_counts.get(*k).copied().unwrap_or(0);
            let n = noisy_counts.get(*k).copied().unwrap_or(0);
            r > 0 && r + n >= opts.min_category_count
        })
        .collect();
    let noisy_total: usize = categories.iter().map(|k| noisy_counts.get(*k).copied().unwrap_or(0)).sum();
    let reported_total: usize = categories.iter().map(|k| reported_counts[*k]).sum();
    let location_shift = if categories.len() >= 2 && noisy_total > 0 {
        let observed: Vec<f64> = categories
            .iter()
            .map(|k| noisy_counts.get(*k).copied().unwrap_or(0) as f64)
            .collect();
        let expected: Vec<f64> = categories
            .iter()
            .map(|k| reported_counts[*k] as f64 / reported_total as f64 * noisy_total as f64)
            .collect();
        chi_square_gof(&observed, &expected).ok().map(|t| ChiSquareSummary {
            categories: categories.iter().map(|k| (*k).clone()).collect(),
            statistic: t.statistic,
            df: t.df,
            p: t.p,
        })
    } else {
        None
    };

    NoiseCharacterization {
        type_frequency,
        mean_latency,
        reported_locations: proportions(&reported_counts),
        noisy_locations: proportions(&noisy_counts),
        latency_by_type,
        location_shift,
    }
}
