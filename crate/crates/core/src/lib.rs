//! Learning vulnerability predictors from positive and unlabeled data.
//!
//! The crate is organised around the pipeline:
//!
//! - [`corpus`]: samples, releases, the on-disk corpus layout, source cleaning,
//!   hashed TF-IDF embedding, latent-vulnerability tracing and noise reports.
//! - [`synthgen`]: seeded generator of release-ordered corpora with
//!   instance-dependent hidden positives.
//! - [`forest`]: CART random forest, class weighting, random oversampling and a
//!   kNN one-class scorer.
//! - [`nll`]: noisy-label cleaning (confident learning, reliable negatives,
//!   two-stage relabeling, Elkan-Noto calibration, oracle relabeling).
//! - [`evalstat`]: metrics, nonparametric tests, hyperparameter search and the
//!   next-release validation harness.

pub mod corpus;
pub mod evalstat;
pub mod forest;
pub mod matrix;
pub mod nll;
pub mod seed;
pub mod synthgen;

pub use matrix::Matrix;
