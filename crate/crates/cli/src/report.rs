use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use svnoise::evalstat::{FoldResult, Method, FOLDS_CSV_HEADER};

use crate::{plot, write_file, CliResult, Failure};

pub const AGGREGATE_HEADER: &str =
    "method,folds,mean_auc,mean_recall_reported,mean_recall_noisy,mean_recall_overall,mean_precision,mean_pu_gmean";

#[derive(clap::Args)]
pub struct ReportArgs {
    /// Output directory for aggregate.csv and the charts.
    #[arg(long)]
    out: PathBuf,
    /// folds.csv files written by `run`.
    inputs: Vec<PathBuf>,
}

fn parse_opt(field: &str) -> anyhow::Result<Option<f64>> {
    if field == "NA" {
        Ok(None)
    } else {
        Ok(Some(field.parse()?))
    }
}

fn parse_row(record: &csv::StringRecord) -> anyhow::Result<FoldResult> {
    let f = |i: usize| record.get(i).ok_or_else(|| anyhow!("missing column {i}"));
    Ok(FoldResult {
        test_release: f(0)?.parse()?,
        method: f(1)?.parse()?,
        auc: f(2)?.parse()?,
        threshold: f(3)?.parse()?,
        recall_reported: parse_opt(f(4)?)?,
        recall_noisy: parse_opt(f(5)?)?,
        recall_overall: parse_opt(f(6)?)?,
        precision: parse_opt(f(7)?)?,
        pu_gmean: f(8)?.parse()?,
        predicted_positives: f(9)?.parse()?,
        validation_auc: None,
    })
}

pub fn read_folds(path: &Path) -> anyhow::Result<Vec<FoldResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = rdr.records();
    match records.next() {
        Some(header) => {
            let header = header?;
            if header.iter().collect::<Vec<_>>().join(",") != FOLDS_CSV_HEADER {
                bail!("{}: unexpected header, want {FOLDS_CSV_HEADER}", path.display());
            }
        }
        None => bail!("{}: empty file", path.display()),
    }
    records
        .enumerate()
        .map(|(i, r)| {
            let r = r?;
            if r.len() != FOLDS_CSV_HEADER.split(',').count() {
                bail!("{} row {}: expected 10 columns, found {}", path.display(), i + 2, r.len());
            }
            parse_row(&r).with_context(|| format!("{} row {}", path.display(), i + 2))
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:?}"))
}

pub fn report(args: &ReportArgs) -> CliResult {
    if args.inputs.is_empty() {
        return Err(Failure::Data(anyhow!("no input files")));
    }
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(read_folds(path)?);
    }
    if rows.is_empty() {
        return Err(Failure::Data(anyhow!("input files contain no fold rows")));
    }
    let mut by_method: BTreeMap<Method, Vec<&FoldResult>> = BTreeMap::new();
    for r in &rows {
        by_method.entry(r.method).or_default().push(r);
    }

    let mut csv_out = format!("{AGGREGATE_HEADER}\n");
    let mut bars = Vec::new();
    let mut series = Vec::new();
    for (method, rs) in &by_method {
        let mean_auc = mean(rs.iter().map(|r| r.auc)).expect("group is non-empty");
        csv_out.push_str(&format!(
            "{},{},{:?},{},{},{},{},{:?}\n",
            method,
            rs.len(),
            mean_auc,
            cell(mean(rs.iter().filter_map(|r| r.recall_reported))),
            cell(mean(rs.iter().filter_map(|r| r.recall_noisy))),
            cell(mean(rs.iter().filter_map(|r| r.recall_overall))),
            cell(mean(rs.iter().filter_map(|r| r.precision))),
            mean(rs.iter().map(|r| r.pu_gmean)).expect("group is non-empty"),
        ));
        bars.push((method.label().to_string(), mean_auc));
        let mut per_release: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for r in rs {
            per_release.entry(r.test_release).or_default().push(r.auc);
        }
        series.push(plot::Series {
            name: method.label().to_string(),
            points: per_release
                .iter()
                .map(|(&rel, aucs)| (f64::from(rel), mean(aucs.iter().copied()).expect("non-empty")))
                .collect(),
        });
    }
    write_file(&args.out.join("aggregate.csv"), csv_out)?;
    write_file(&args.out.join("auc_by_release.svg"), plot::line_chart("AUC by test release", "test release", "AUC", &series))?;
    write_file(&args.out.join("mean_auc.svg"), plot::bar_chart("Mean AUC", "AUC", &bars))?;
    eprintln!("aggregated {} rows for {} methods", rows.len(), by_method.len());
    Ok(())
}
