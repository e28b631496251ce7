//! Random forest classifier with probability outputs.
//!
//! Trees are CART on weighted Gini impurity, grown on bootstrap resamples.
//! Each tree draws from its own RNG stream derived from the forest seed, so a
//! fitted forest does not depend on how many threads built it.

mod one_class;
mod sampling;
mod tree;

pub use one_class::{one_class_score, OneClassScorer, DEFAULT_ONE_CLASS_K};
pub use sampling::{balanced_class_weights, random_oversample, ClassWeights};
pub use tree::{Node, NodeRecord, Tree};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::Matrix;
use tree::GrowParams;

pub const FOREST_FORMAT: &str = "svnoise-forest";
pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("feature matrix has {rows} rows but {labels} labels were given")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid forest configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample weights must be positive and finite")]
    InvalidWeights,
    #[error("empty training set for the one-class scorer")]
    NoPositives,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("forest document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, dimension: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (dimension as f64).sqrt().floor() as usize,
            MaxFeatures::All => dimension,
            MaxFeatures::Fraction(f) => (f * dimension as f64).floor() as usize,
        };
        m.clamp(1, dimension.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
            class_weighting: ClassWeighting::None,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidConfig("min_samples_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(ForestError::InvalidConfig("max_depth must be at least 1".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ForestError::InvalidConfig(format!("max_features fraction {f} not in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weighting(mut self, class_weighting: ClassWeighting) -> Self {
        self.class_weighting = class_weighting;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    config: ForestConfig,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    dimension: usize,
    config: ForestConfig,
    trees: Vec<NodeRecord>,
}

/// Fit a forest. `sample_weights`, when given, multiply the class weights
/// selected by `config.class_weighting`.
pub fn fit_forest(
    features: &Matrix,
    labels: &[u8],
    sample_weights: Option<&[f64]>,
    config: &ForestConfig,
) -> Result<Forest, ForestError> {
    config.validate()?;
    let n = features.rows();
    if n != labels.len() {
        return Err(ForestError::LengthMismatch { rows: n, labels: labels.len() });
    }
    if n < 2 {
        return Err(ForestError::TooFewSamples(n));
    }
    let mut weights = match sample_weights {
        Some(w) if w.len() != n => return Err(ForestError::LengthMismatch { rows: n, labels: w.len() }),
        Some(w) => {
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(ForestError::InvalidWeights);
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let class_weights = balanced_class_weights(labels)?;
    if config.class_weighting == ClassWeighting::Balanced {
        for (w, &l) in weights.iter_mut().zip(labels) {
            *w *= class_weights.of(l);
        }
    }

    let dimension = features.cols();
    let params = GrowParams {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        max_features: config.max_features.resolve(dimension),
    };
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::derived_rng(config.seed, "tree", t as u64);
            let mut count = vec![0u32; n];
            if config.bootstrap {
                for _ in 0..n {
                    count[rng.random_range(0..n)] += 1;
                }
            } else {
                count.iter_mut().for_each(|c| *c = 1);
            }
            let rows: Vec<usize> = (0..n).filter(|&i| count[i] > 0).collect();
            let w: Vec<f64> = weights.iter().zip(&count).map(|(w, &c)| w * f64::from(c)).collect();
            tree::grow(features, labels, &w, &count, rows, params, &mut rng)
        })
        .collect();
    Ok(Forest { trees, config: *config, dimension })
}

impl Forest {
    pub fn from_trees(trees: Vec<Tree>, config: ForestConfig, dimension: usize) -> Result<Self, ForestError> {
        if trees.is_empty() {
            return Err(ForestError::InvalidConfig("a forest needs at least one tree".into()));
        }
        for t in &trees {
            Tree::new(t.nodes().to_vec(), dimension)?;
        }
        Ok(Self { trees, config, dimension })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Mean over trees of the leaf positive fraction.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_proba(&self, features: &Matrix) -> Result<Vec<f64>, ForestError> {
        if features.cols() != self.dimension {
            return Err(ForestError::DimensionMismatch { expected: self.dimension, found: features.cols() });
        }
        Ok(features.iter_rows().map(|r| self.predict_row(r)).collect())
    }

    pub fn to_json(&self) -> String {
        let doc = ForestDocument {
            format: FOREST_FORMAT.to_string(),
            version: FOREST_FORMAT_VERSION,
            dimension: self.dimension,
            config: self.config,
            trees: self.trees.iter().map(Tree::to_record).collect(),
        };
        serde_json::to_string(&doc).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        // Deep trees nest deeper than the default parser limit.
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let doc = ForestDocument::deserialize(&mut de).map_err(|e| ForestError::Document(e.to_string()))?;
        if doc.format != FOREST_FORMAT || doc.version != FOREST_FORMAT_VERSION {
            return Err(ForestError::Document(format!(
                "unsupported format {} v{}",
                doc.format, doc.version
            )));
        }
        let trees = doc
            .trees
            .iter()
            .map(|r| Tree::from_record(r, doc.dimension))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_trees(trees, doc.config, doc.dimension)
    }
}

/// Free-function form of [`Forest::predict_proba`].
pub fn predict_proba(forest: &Forest, features: &Matrix) -> Result<Vec<f64>, ForestError> {
    forest.predict_proba(features)
}
