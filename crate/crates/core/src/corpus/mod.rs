//! Corpus data model: samples grouped into temporally ordered releases.
//!
//! A [`Sample`] carries what a learner may see (features and the observed
//! positive/unlabeled label) next to the hidden ground-truth annotation used
//! only for scoring and for the oracle relabeling baseline.

mod characterize;
mod clean;
mod embed;
mod io;
mod trace;

pub use characterize::{
    characterize_noise, characterize_noise_with, CharacterizeOptions, ChiSquareSummary,
    KruskalSummary, NoiseCharacterization,
};
pub use clean::{filter_and_clean, is_excluded_path, strip_comments};
pub use embed::{embed_tokens, token_bucket, tokenize, DocumentFrequency, DEFAULT_EMBED_DIMS};
pub use io::{load_corpus, save_corpus};
pub use trace::{trace_latent_presence, LatentPresence};

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Matrix;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid meta.json in {path}: {source}")]
    Meta {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unparseable record in {path}: {message}")]
    Record { path: PathBuf, message: String },
    #[error("dimension mismatch: release {release} has dimension {found}, expected {expected}")]
    DimensionMismatch { release: u32, expected: usize, found: usize },
    #[error("duplicate sample id {id:?} in release {release}")]
    DuplicateId { release: u32, id: String },
    #[error("release indices must be strictly increasing ({previous} then {next})")]
    ReleaseOrder { previous: u32, next: u32 },
    #[error("corpus has no releases")]
    Empty,
    #[error("sample {id:?}: {message}")]
    InvalidSample { id: String, message: String },
    #[error("malformed diff at line {line}: {message}")]
    MalformedDiff { line: usize, message: String },
}

/// Label a learner is allowed to observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observed {
    Positive,
    Unlabeled,
}

/// Ground-truth annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Disclosed vulnerability, visible as a positive label.
    Reported,
    /// Fixed without disclosure.
    Silent,
    /// Present in this release, reported only in a later one.
    Latent,
    /// No known vulnerability.
    CleanUnknown,
}

impl Truth {
    pub fn is_vulnerable(self) -> bool {
        !matches!(self, Truth::CleanUnknown)
    }

    /// Hidden positive: vulnerable but carrying an unlabeled observation.
    pub fn is_noisy(self) -> bool {
        matches!(self, Truth::Silent | Truth::Latent)
    }
}

impl fmt::Display for Observed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observed::Positive => "positive",
            Observed::Unlabeled => "unlabeled",
        })
    }
}

impl FromStr for Observed {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Observed::Positive),
            "unlabeled" => Ok(Observed::Unlabeled),
            other => Err(format!("unknown observed label {other:?}")),
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::Reported => "reported",
            Truth::Silent => "silent",
            Truth::Latent => "latent",
            Truth::CleanUnknown => "clean_unknown",
        })
    }
}

impl FromStr for Truth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reported" => Ok(Truth::Reported),
            "silent" => Ok(Truth::Silent),
            "latent" => Ok(Truth::Latent),
            "clean_unknown" => Ok(Truth::CleanUnknown),
            other => Err(format!("unknown truth annotation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub path: String,
    pub features: Vec<f64>,
    pub observed: Observed,
    pub truth: Truth,
    pub type_tag: Option<String>,
    pub latency_days: Option<u32>,
}

impl Sample {
    /// Check the label and feature invariants against dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), CorpusError> {
        let fail = |message: String| CorpusError::InvalidSample { id: self.id.clone(), message };
        if self.features.len() != dim {
            return Err(fail(format!(
                "has {} features, expected {dim}",
                self.features.len()
            )));
        }
        if let Some(j) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(fail(format!("feature {j} is not finite")));
        }
        if self.observed == Observed::Positive && self.truth != Truth::Reported {
            return Err(fail("observed positive requires truth = reported".into()));
        }
        if self.truth.is_noisy() && self.observed != Observed::Unlabeled {
            return Err(fail("silent/latent samples must be unlabeled".into()));
        }
        if self.latency_days.is_some() && self.truth != Truth::Latent {
            return Err(fail("latency_days is only allowed for latent samples".into()));
        }
        Ok(())
    }

    pub fn is_observed_positive(&self) -> bool {
        self.observed == Observed::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Release {
    pub index: u32,
    pub samples: Vec<Sample>,
}

impl Release {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature matrix in sample order.
    pub fn feature_matrix(&self, dim: usize) -> Matrix {
        let mut data = Vec::with_capacity(self.samples.len() * dim);
        for s in &self.samples {
            data.extend_from_slice(&s.features);
        }
        Matrix::from_flat(self.samples.len(), dim, data)
    }

    pub fn observed_labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| u8::from(s.is_observed_positive())).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    fn validate(&self, dim: usize) -> Result<(), CorpusError> {
        let mut seen = HashSet::with_capacity(self.samples.len());
        for s in &self.samples {
            s.validate(dim)?;
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId { release: self.index, id: s.id.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    releases: Vec<Release>,
    dimension: usize,
}

impl Corpus {
    /// Validating constructor; releases must already be sorted by index.
    pub fn new(releases: Vec<Release>, dimension: usize) -> Result<Self, CorpusError> {
        if releases.is_empty() {
            return Err(CorpusError::Empty);
        }
        for pair in releases.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(CorpusError::ReleaseOrder {
                    previous: pair[0].index,
                    next: pair[1].index,
                });
            }
        }
        for r in &releases {
            r.validate(dimension)?;
        }
        Ok(Self { releases, dimension })
    }

    pub fn releases(&self) -> &[Release] {
        &self.releases
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> + '_ {
        self.releases.iter().flat_map(|r| r.samples.iter())
    }

    pub fn into_releases(self) -> Vec<Release> {
        self.releases
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, observed: Observed, truth: Truth) -> Sample {
        Sample {
            id: id.into(),
            path: "a.c".into(),
            features: vec![0.0, 1.0],
            observed,
            truth,
            type_tag: None,
            latency_days: None,
        }
    }

    #[test]
    fn positive_must_be_reported() {
        let s = sample("a", Observed::Positive, Truth::Latent);
        assert!(s.validate(2).is_err());
        assert!(sample("b", Observed::Positive, Truth::Reported).validate(2).is_ok());
    }

    #[test]
    fn latency_only_on_latent() {
        let mut s = sample("a", Observed::Unlabeled, Truth::Silent);
        s.latency_days = Some(3);
        assert!(s.validate(2).is_err());
        s.truth = Truth::Latent;
        assert!(s.validate(2).is_ok());
    }

    #[test]
    fn non_finite_features_rejected() {
        let mut s = sample("a", Observed::Unlabeled, Truth::CleanUnknown);
        s.features[1] = f64::NAN;
        assert!(s.validate(2).is_err());
    }

    #[test]
    fn corpus_rejects_unsorted_and_duplicate() {
        let r = |index, ids: &[&str]| Release {
            index,
            samples: ids
                .iter()
                .map(|id| sample(id, Observed::Unlabeled, Truth::CleanUnknown))
                .collect(),
        };
        assert!(matches!(
            Corpus::new(vec![r(2, &["a"]), r(1, &["b"])], 2),
            Err(CorpusError::ReleaseOrder { .. })
        ));
        assert!(matches!(
            Corpus::new(vec![r(1, &["a", "a"])], 2),
            Err(CorpusError::DuplicateId { .. })
        ));
        assert!(matches!(Corpus::new(vec![], 2), Err(CorpusError::Empty)));
    }
}
