//! Per-fold results, per-method summaries and their serialized forms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::methods::Method;
use super::stats::wilcoxon_signed_rank;
use super::EvalError;

pub const FOLDS_CSV_HEADER: &str =
    "test_release,method,auc,threshold,recall_reported,recall_noisy,recall_overall,precision,pu_gmean,predicted_positives";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub test_release: u32,
    pub method: Method,
    pub auc: f64,
    pub threshold: f64,
    pub recall_reported: Option<f64>,
    pub recall_noisy: Option<f64>,
    pub recall_overall: Option<f64>,
    pub precision: Option<f64>,
    pub pu_gmean: f64,
    pub predicted_positives: usize,
    pub validation_auc: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_float)
}

fn fmt_float(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:?}")
    }
}

impl FoldResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.test_release,
            self.method,
            fmt_float(self.auc),
            fmt_float(self.threshold),
            opt(self.recall_reported),
            opt(self.recall_noisy),
            opt(self.recall_overall),
            opt(self.precision),
            fmt_float(self.pu_gmean),
            self.predicted_positives,
        )
    }
}

/// Means over folds; optional columns average the folds where they apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub folds: usize,
    pub mean_auc: f64,
    pub mean_recall_reported: Option<f64>,
    pub mean_recall_noisy: Option<f64>,
    pub mean_recall_overall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_pu_gmean: f64,
}

/// Paired Wilcoxon test of a method's fold AUCs against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: Method,
    pub against: Method,
    pub mean_difference: f64,
    pub p_value: Option<f64>,
    pub exact: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub budget: usize,
    pub folds: Vec<FoldResult>,
    pub summaries: Vec<MethodSummary>,
    pub comparisons: Vec<Comparison>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    /// Build summaries and baseline comparisons from fold results.
    pub fn from_folds(seed: u64, budget: usize, mut folds: Vec<FoldResult>) -> Self {
        folds.sort_by_key(|f| (f.test_release, f.method));
        let mut by_method: BTreeMap<Method, Vec<&FoldResult>> = BTreeMap::new();
        for f in &folds {
            by_method.entry(f.method).or_default().push(f);
        }
        let summaries = by_method
            .iter()
            .map(|(&method, rows)| MethodSummary {
                method,
                folds: rows.len(),
                mean_auc: mean(rows.iter().map(|r| r.auc)).unwrap_or(f64::NAN),
                mean_recall_reported: mean(rows.iter().filter_map(|r| r.recall_reported)),
                mean_recall_noisy: mean(rows.iter().filter_map(|r| r.recall_noisy)),
                mean_recall_overall: mean(rows.iter().filter_map(|r| r.recall_overall)),
                mean_precision: mean(rows.iter().filter_map(|r| r.precision)),
                mean_pu_gmean: mean(rows.iter().map(|r| r.pu_gmean)).unwrap_or(f64::NAN),
            })
            .collect();
        let comparisons = match by_method.get(&Method::Baseline) {
            Some(base) => by_method
                .iter()
                .filter(|(&m, _)| m != Method::Baseline)
                .map(|(&m, rows)| compare(m, rows, base))
                .collect(),
            None => Vec::new(),
        };
        Self { seed, budget, folds, summaries, comparisons }
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn comparison(&self, method: Method) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.method == method)
    }

    /// AUC per fold for `method`, ordered by test release.
    pub fn aucs(&self, method: Method) -> Vec<f64> {
        self.folds.iter().filter(|f| f.method == method).map(|f| f.auc).collect()
    }

    pub fn write_folds_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FOLDS_CSV_HEADER}")?;
        for f in &self.folds {
            writeln!(out, "{}", f.csv_row())?;
        }
        Ok(())
    }

    pub fn folds_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_folds_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            seed: u64,
            budget: usize,
            methods: &'a [MethodSummary],
            comparisons: &'a [Comparison],
        }
        serde_json::to_string_pretty(&Summary {
            seed: self.seed,
            budget: self.budget,
            methods: &self.summaries,
            comparisons: &self.comparisons,
        })
        .expect("summary serializes")
    }
}

fn compare(method: Method, rows: &[&FoldResult], base: &[&FoldResult]) -> Comparison {
    let base_auc: BTreeMap<u32, f64> = base.iter().map(|r| (r.test_release, r.auc)).collect();
    let (a, b): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| base_auc.get(&r.test_release).map(|&b| (r.auc, b)))
        .unzip();
    let mean_difference = mean(a.iter().zip(&b).map(|(x, y)| x - y)).unwrap_or(f64::NAN);
    let (p_value, exact, note) = match wilcoxon_signed_rank(&a, &b) {
        Ok(w) => (Some(w.p), Some(w.exact), None),
        Err(EvalError::AllZeroDifferences) => (None, None, Some("identical to baseline on every fold".to_string())),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Comparison { method, against: Method::Baseline, mean_difference, p_value, exact, note }
}
