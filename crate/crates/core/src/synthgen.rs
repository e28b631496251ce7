//! Seeded generator of release-ordered corpora with hidden positives.
//!
//! Features come from isotropic Gaussian blobs: one negative super-cluster
//! and one cluster per vulnerability type, all placed off the origin so that
//! cosine geometry is meaningful. Each type sits `separation` away from the
//! negative cluster along a direction mixing one coordinate shared by all
//! types with a coordinate of its own, and every cluster mean drifts
//! linearly with the release index. Each type hides its positives at its own
//! rate, which makes the label noise depend on the instance rather than
//! being uniform.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Observed, Release, Sample, Truth};
use crate::seed::{self, Rng};

/// Source folders synthetic files are spread over.
pub const FOLDERS: [&str; 8] = ["dom", "js", "layout", "media", "ipc", "netwerk", "gfx", "security"];

const DEFAULT_LATENCY_DAYS: [f64; 8] = [209.0, 246.0, 113.0, 26.0, 169.0, 131.0, 229.0, 33.0];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub releases: usize,
    pub samples_per_release: usize,
    pub dimension: usize,
    /// Share of vulnerable samples, in (0, 0.5).
    pub true_positive_rate: f64,
    /// Base share of vulnerable samples whose label is hidden.
    pub hide_rate: f64,
    pub type_count: usize,
    /// Per-type multiplier on `hide_rate` (clipped to [0, 1] after scaling).
    pub per_type_hide_bias: Vec<f64>,
    /// Per-release shift of every cluster mean, in units of the cluster spread.
    pub drift: f64,
    pub seed: u64,
    /// Distance from the negative mean to each type mean, in cluster spreads.
    pub separation: f64,
    /// Spread of the negative cluster relative to the type clusters.
    pub negative_spread: f64,
    /// Distance of the negative mean from the origin.
    pub offset: f64,
    /// Share of hidden positives that are latent rather than silent.
    pub latent_fraction: f64,
    /// Mean latency in days per type.
    pub type_latency_days: Vec<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::with_types(4)
    }
}

impl SynthConfig {
    /// Defaults for `type_count` types, hide biases spread evenly around 1.
    pub fn with_types(type_count: usize) -> Self {
        let bias = if type_count <= 1 {
            vec![1.0; type_count]
        } else {
            (0..type_count)
                .map(|t| 0.7 + 0.6 * t as f64 / (type_count - 1) as f64)
                .collect()
        };
        Self {
            releases: 12,
            samples_per_release: 2000,
            dimension: 16,
            true_positive_rate: 0.04,
            hide_rate: 0.75,
            type_count,
            per_type_hide_bias: bias,
            drift: 0.15,
            seed: 0,
            separation: 3.0,
            negative_spread: 1.0,
            offset: 4.0,
            latent_fraction: 2.0 / 3.0,
            type_latency_days: (0..type_count).map(|t| DEFAULT_LATENCY_DAYS[t % 8]).collect(),
        }
    }

    /// Hide probability of each type.
    pub fn effective_hide_rates(&self) -> Vec<f64> {
        self.per_type_hide_bias
            .iter()
            .map(|b| (self.hide_rate * b).clamp(0.0, 1.0))
            .collect()
    }

    pub fn mean_hide_rate(&self) -> f64 {
        let rates = self.effective_hide_rates();
        rates.iter().sum::<f64>() / rates.len() as f64
    }

    pub fn expected_observed_positive_rate(&self) -> f64 {
        self.true_positive_rate * (1.0 - self.mean_hide_rate())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidConfig(m));
        if self.releases < 3 {
            return fail(format!("need at least 3 releases, got {}", self.releases));
        }
        if self.samples_per_release == 0 {
            return fail("samples_per_release must be positive".into());
        }
        if self.dimension < 2 {
            return fail("dimension must be at least 2".into());
        }
        if !(self.true_positive_rate > 0.0 && self.true_positive_rate < 0.5) {
            return fail(format!("true_positive_rate {} not in (0, 0.5)", self.true_positive_rate));
        }
        if !(0.0..=1.0).contains(&self.hide_rate) {
            return fail(format!("hide_rate {} not in [0, 1]", self.hide_rate));
        }
        if self.type_count == 0 {
            return fail("type_count must be positive".into());
        }
        if self.per_type_hide_bias.len() != self.type_count {
            return fail("per_type_hide_bias needs one entry per type".into());
        }
        if self.type_latency_days.len() != self.type_count {
            return fail("type_latency_days needs one entry per type".into());
        }
        if self.per_type_hide_bias.iter().chain(&self.type_latency_days).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return fail("hide biases and latencies must be finite and non-negative".into());
        }
        for (name, v) in [
            ("drift", self.drift),
            ("separation", self.separation),
            ("offset", self.offset),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.negative_spread.is_finite() && self.negative_spread > 0.0) {
            return fail("negative_spread must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.latent_fraction) {
            return fail("latent_fraction must be in [0, 1]".into());
        }
        if self.expected_observed_positive_rate() <= 0.0 {
            return fail("every positive would be hidden".into());
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

struct Layout {
    negative: Vec<f64>,
    types: Vec<Vec<f64>>,
    /// Drift directions: index 0 for the negative cluster, then one per type.
    drift: Vec<Vec<f64>>,
}

impl Layout {
    fn new(cfg: &SynthConfig) -> Self {
        let d = cfg.dimension;
        let mut rng = seed::derived_rng(cfg.seed, "layout", 0);
        let mut axis = gaussian_vec(&mut rng, d);
        normalize(&mut axis);
        let mut dims: Vec<usize> = (0..d).collect();
        dims.shuffle(&mut rng);
        let unit = |k: usize| {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            v
        };
        let shared = unit(dims[0]);
        let negative: Vec<f64> = axis.iter().map(|a| a * cfg.offset).collect();
        let types = (0..cfg.type_count)
            .map(|t| {
                let own = unit(dims[1 + t % (d - 1)]);
                let mut dir: Vec<f64> = shared.iter().zip(&own).map(|(s, o)| s + 0.75 * o).collect();
                normalize(&mut dir);
                negative.iter().zip(&dir).map(|(c, u)| c + cfg.separation * u).collect()
            })
            .collect();
        let drift = (0..=cfg.type_count)
            .map(|_| {
                let mut w = gaussian_vec(&mut rng, d);
                normalize(&mut w);
                w
            })
            .collect();
        Self { negative, types, drift }
    }

    fn center(&self, cluster: Option<usize>, release: usize, drift: f64) -> Vec<f64> {
        let (base, dir) = match cluster {
            None => (&self.negative, &self.drift[0]),
            Some(t) => (&self.types[t], &self.drift[t + 1]),
        };
        base.iter().zip(dir).map(|(b, w)| b + drift * release as f64 * w).collect()
    }
}

fn sample_release(cfg: &SynthConfig, layout: &Layout, r: usize) -> Release {
    let mut rng = seed::derived_rng(cfg.seed, "release", r as u64);
    let hide = cfg.effective_hide_rates();
    let neg_center = layout.center(None, r, cfg.drift);
    let type_centers: Vec<Vec<f64>> = (0..cfg.type_count).map(|t| layout.center(Some(t), r, cfg.drift)).collect();
    let latency: Vec<Geometric> = cfg
        .type_latency_days
        .iter()
        .map(|m| Geometric::new(1.0 / (m + 1.0)).expect("valid geometric parameter"))
        .collect();

    let samples = (0..cfg.samples_per_release)
        .map(|i| {
            let vulnerable = rng.random_bool(cfg.true_positive_rate);
            let (features, truth, observed, type_tag, latency_days, folder) = if vulnerable {
                let t = rng.random_range(0..cfg.type_count);
                let features: Vec<f64> =
                    type_centers[t].iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect();
                let (truth, observed, latency_days) = if rng.random_bool(hide[t]) {
                    if rng.random_bool(cfg.latent_fraction) {
                        let days = latency[t].sample(&mut rng).min(u64::from(u32::MAX)) as u32;
                        (Truth::Latent, Observed::Unlabeled, Some(days))
                    } else {
                        (Truth::Silent, Observed::Unlabeled, None)
                    }
                } else {
                    (Truth::Reported, Observed::Positive, None)
                };
                let folder = if rng.random_bool(0.6) {
                    FOLDERS[t % FOLDERS.len()]
                } else {
                    FOLDERS[rng.random_range(0..FOLDERS.len())]
                };
                (features, truth, observed, Some(format!("T{t}")), latency_days, folder)
            } else {
                let features: Vec<f64> = neg_center
                    .iter()
                    .map(|c| c + cfg.negative_spread * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let folder = FOLDERS[rng.random_range(0..FOLDERS.len())];
                (features, Truth::CleanUnknown, Observed::Unlabeled, None, None, folder)
            };
            Sample {
                id: format!("r{r:03}-{i:06}"),
                path: format!("{folder}/file_{r:03}_{i:06}.cpp"),
                features,
                observed,
                truth,
                type_tag,
                latency_days,
            }
        })
        .collect();
    Release { index: r as u32, samples }
}

pub fn generate_synthetic_corpus(cfg: &SynthConfig) -> Result<Corpus, SynthError> {
    cfg.validate()?;
    let layout = Layout::new(cfg);
    let releases: Vec<Release> = (0..cfg.releases)
        .into_par_iter()
        .map(|r| sample_release(cfg, &layout, r))
        .collect();
    Ok(Corpus::new(releases, cfg.dimension)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { releases: 3, samples_per_release: 300, true_positive_rate: 0.2, ..Default::default() }
    }

    #[test]
    fn no_hiding_means_no_noise() {
        let cfg = SynthConfig { hide_rate: 0.0, ..small() };
        let corpus = generate_synthetic_corpus(&cfg).unwrap();
        for s in corpus.samples() {
            assert!(matches!(s.truth, Truth::Reported | Truth::CleanUnknown));
            assert_eq!(s.observed == Observed::Positive, s.truth == Truth::Reported);
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            SynthConfig { releases: 2, ..small() },
            SynthConfig { true_positive_rate: 0.5, ..small() },
            SynthConfig { hide_rate: 1.2, ..small() },
            SynthConfig { per_type_hide_bias: vec![1.0], ..small() },
            SynthConfig { hide_rate: 1.0, per_type_hide_bias: vec![2.0; 4], ..small() },
        ];
        for cfg in bad {
            assert!(generate_synthetic_corpus(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn ids_unique_and_counts_add_up() {
        let corpus = generate_synthetic_corpus(&small()).unwrap();
        let mut ids = std::collections::HashSet::new();
        for r in corpus.releases() {
            assert_eq!(r.len(), 300);
            for s in &r.samples {
                assert!(ids.insert(s.id.clone()));
            }
        }
    }

    #[test]
    fn effective_rates_are_clipped() {
        let cfg = SynthConfig { hide_rate: 0.9, per_type_hide_bias: vec![0.5, 2.0], type_count: 2, type_latency_days: vec![1.0, 2.0], ..small() };
        assert_eq!(cfg.effective_hide_rates(), [0.45, 1.0]);
    }

    #[test]
    fn default_mean_hide_equals_base_rate() {
        let cfg = SynthConfig::default();
        assert!((cfg.mean_hide_rate() - 0.75).abs() < 1e-12);
        assert!((cfg.expected_observed_positive_rate() - 0.01).abs() < 1e-12);
    }
}
