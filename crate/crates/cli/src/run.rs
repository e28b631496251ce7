use std::path::PathBuf;

use anyhow::Context;
use serde::Deserialize;
use svnoise::corpus::load_corpus;
use svnoise::evalstat::{next_release_validate, EvalError, HarnessOptions, Method, ThresholdSource, DEFAULT_BUDGET};

use crate::{config, plot, usage, write_file, CliResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdArg {
    Test,
    Validation,
}

#[derive(clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Method ids, comma separated or repeated; `all` selects every method.
    #[arg(long, value_delimiter = ',', value_parser = parse_method_selection)]
    method: Vec<Selection>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hyperparameter configurations tried per method and fold.
    #[arg(long)]
    budget: Option<usize>,
    /// Output directory for folds.csv, summary.json and the AUC chart.
    #[arg(long)]
    out: Option<PathBuf>,
    /// ROC the decision threshold is taken from.
    #[arg(long, value_enum)]
    threshold: Option<ThresholdArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunFile {
    corpus: Option<PathBuf>,
    methods: Option<Vec<String>>,
    seed: Option<u64>,
    budget: Option<usize>,
    out: Option<PathBuf>,
    threshold: Option<ThresholdArg>,
}

/// Methods named by one `--method` value.
#[derive(Debug, Clone)]
pub struct Selection(Vec<Method>);

fn parse_method_selection(s: &str) -> Result<Selection, String> {
    if s == "all" {
        return Ok(Selection(Method::ALL.to_vec()));
    }
    s.parse::<Method>().map(|m| Selection(vec![m])).map_err(|e| {
        let ids: Vec<&str> = Method::ALL.iter().map(|m| m.id()).collect();
        format!("{e}; expected one of: all, {}", ids.join(", "))
    })
}

fn dedup_in_order(methods: impl IntoIterator<Item = Method>) -> Vec<Method> {
    let mut out = Vec::new();
    for m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

pub fn run(args: &RunArgs) -> CliResult {
    let file: RunFile = config::load(args.config.as_deref())?;
    let corpus_dir = config::required(args.corpus.clone(), file.corpus, "corpus")?;
    let out = config::required(args.out.clone(), file.out, "out")?;
    let seed = config::required(args.seed, file.seed, "seed")?;
    let budget = args.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET);
    if budget == 0 {
        return usage("--budget must be at least 1");
    }
    let methods = if !args.method.is_empty() {
        dedup_in_order(args.method.iter().flat_map(|s| s.0.iter().copied()))
    } else if let Some(ids) = file.methods {
        let mut parsed = Vec::new();
        for id in &ids {
            match parse_method_selection(id) {
                Ok(sel) => parsed.extend(sel.0),
                Err(e) => return usage(format!("invalid config: {e}")),
            }
        }
        dedup_in_order(parsed)
    } else {
        Method::ALL.to_vec()
    };
    if methods.is_empty() {
        return usage("no methods selected");
    }
    let threshold = match args.threshold.or(file.threshold).unwrap_or(ThresholdArg::Test) {
        ThresholdArg::Test => ThresholdSource::TestRoc,
        ThresholdArg::Validation => ThresholdSource::ValidationRoc,
    };

    let corpus = load_corpus(&corpus_dir).with_context(|| format!("loading {}", corpus_dir.display()))?;
    let options = HarnessOptions { methods, budget, seed, threshold };
    let report = match next_release_validate(&corpus, &options) {
        Ok(r) => r,
        Err(EvalError::TooFewReleases(n)) => {
            return Err(Failure::Data(anyhow::anyhow!("need at least 3 releases, corpus has {n}")))
        }
        Err(e) => return Err(e.into()),
    };

    write_file(&out.join("folds.csv"), report.folds_csv())?;
    write_file(&out.join("summary.json"), report.summary_json() + "\n")?;
    let series: Vec<plot::Series> = report
        .summaries
        .iter()
        .map(|s| plot::Series {
            name: s.method.label().to_string(),
            points: report
                .folds
                .iter()
                .filter(|f| f.method == s.method)
                .map(|f| (f64::from(f.test_release), f.auc))
                .collect(),
        })
        .collect();
    write_file(&out.join("auc_by_release.svg"), plot::line_chart("AUC by test release", "test release", "AUC", &series))?;

    for s in &report.summaries {
        println!("{:<14} mean AUC {:.4} over {} folds", s.method.id(), s.mean_auc, s.folds);
    }
    Ok(())
}
