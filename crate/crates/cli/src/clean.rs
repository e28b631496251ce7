use std::path::PathBuf;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use svnoise::corpus::{load_corpus, Truth};
use svnoise::forest::{ClassWeighting, ForestConfig, OneClassScorer, DEFAULT_ONE_CLASS_K};
use svnoise::nll::{
    confident_learning_select, select_reliable_negatives, two_stage_relabel, ConfidentOptions, Dataset, Decision,
    NoiseVerdict,
};
use svnoise::seed;
use svnoise::Matrix;

use crate::{config, usage, write_file, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleanMethod {
    Cl,
    OneStage,
    TwoStage,
    OneClass,
}

impl CleanMethod {
    fn id(self) -> &'static str {
        match self {
            CleanMethod::Cl => "cl",
            CleanMethod::OneStage => "one-stage",
            CleanMethod::TwoStage => "two-stage",
            CleanMethod::OneClass => "one-class",
        }
    }
}

#[derive(clap::Args)]
pub struct CleanArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Release index to clean.
    #[arg(long)]
    release: Option<u32>,
    #[arg(long, value_enum)]
    method: Option<CleanMethod>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for verdicts.csv and metrics.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reliable-negative distance margin.
    #[arg(long, allow_negative_numbers = true)]
    margin: Option<f64>,
    /// Share of unlabeled samples confident learning flags, instead of its estimate.
    #[arg(long)]
    ratio: Option<f64>,
    /// Neighbours for the one-class scorer.
    #[arg(long)]
    k: Option<usize>,
    /// Trees per forest.
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CleanFile {
    corpus: Option<PathBuf>,
    release: Option<u32>,
    method: Option<CleanMethod>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    margin: Option<f64>,
    ratio: Option<f64>,
    k: Option<usize>,
    trees: Option<usize>,
}

/// Flags scored against the hidden-noisy annotations of the unlabeled samples.
/// `None` marks a value that does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationMetrics {
    pub unlabeled: usize,
    pub suspected: usize,
    pub hidden_noisy: usize,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub pu_gmean: Option<f64>,
}

/// `suspected[i]` flags unlabeled sample `i`; `noisy[i]` is its annotation.
/// Without any noisy annotation every score is marked not applicable.
pub fn identification_metrics(suspected: &[bool], noisy: &[bool]) -> IdentificationMetrics {
    let n = suspected.len();
    let flagged = suspected.iter().filter(|&&s| s).count();
    let hidden = noisy.iter().filter(|&&s| s).count();
    let hits = suspected.iter().zip(noisy).filter(|(&s, &t)| s && t).count();
    let (recall, precision, pu_gmean) = if hidden == 0 {
        (None, None, None)
    } else {
        let recall = hits as f64 / hidden as f64;
        let precision = (flagged > 0).then(|| hits as f64 / flagged as f64);
        let gmean = if flagged == 0 { 0.0 } else { recall * recall / (flagged as f64 / n as f64) };
        (Some(recall), precision, Some(gmean))
    };
    IdentificationMetrics { unlabeled: n, suspected: flagged, hidden_noisy: hidden, recall, precision, pu_gmean }
}

/// Lower 10th percentile of leave-one-out scores of the positives against each other.
fn one_class_threshold(positives: &Matrix, k: usize) -> anyhow::Result<f64> {
    let n = positives.rows();
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let scorer = OneClassScorer::new(&positives.select_rows(&rest), k)?;
        scores.push(scorer.score(positives.row(i))?);
    }
    scores.sort_by(f64::total_cmp);
    Ok(scores[(n - 1) / 10])
}

fn one_class_verdicts(dataset: &Dataset, k: usize) -> anyhow::Result<Vec<NoiseVerdict>> {
    let pos: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] != 0).collect();
    if pos.len() < 2 {
        return Err(anyhow!("one-class cleaning needs at least 2 positives, found {}", pos.len()));
    }
    let positives = dataset.features.select_rows(&pos);
    let threshold = one_class_threshold(&positives, k)?;
    let scorer = OneClassScorer::new(&positives, k)?;
    (0..dataset.len())
        .filter(|&i| dataset.labels[i] == 0)
        .map(|i| {
            let score = scorer.score(dataset.features.row(i))?;
            let decision = if score >= threshold { Decision::SuspectedVulnerable } else { Decision::ReliableNegative };
            Ok(NoiseVerdict { sample_id: dataset.ids[i].clone(), decision, score })
        })
        .collect()
}

pub fn clean(args: &CleanArgs) -> CliResult {
    let file: CleanFile = config::load(args.config.as_deref())?;
    let corpus_dir = config::required(args.corpus.clone(), file.corpus, "corpus")?;
    let release_index = config::required(args.release, file.release, "release")?;
    let method = config::required(args.method, file.method, "method")?;
    let out = config::required(args.out.clone(), file.out, "out")?;
    let margin = args.margin.or(file.margin).unwrap_or(0.0);
    let ratio = args.ratio.or(file.ratio);
    let k = args.k.or(file.k).unwrap_or(DEFAULT_ONE_CLASS_K);
    let trees = args.trees.or(file.trees).unwrap_or(ForestConfig::default().n_trees);
    let stochastic = matches!(method, CleanMethod::Cl | CleanMethod::TwoStage);
    let seed = match args.seed.or(file.seed) {
        Some(s) => s,
        None if stochastic => return usage(format!("--seed is required for method {}", method.id())),
        None => 0,
    };
    if !margin.is_finite() || ratio.is_some_and(|r| !(0.0..=1.0).contains(&r)) || k == 0 || trees == 0 {
        return usage("margin must be finite, ratio in [0, 1], k and trees positive");
    }

    let corpus = load_corpus(&corpus_dir).with_context(|| format!("loading {}", corpus_dir.display()))?;
    let release = corpus
        .releases()
        .iter()
        .find(|r| r.index == release_index)
        .ok_or_else(|| anyhow!("corpus has no release {release_index}"))?;
    let dataset = Dataset::new(release.ids(), release.feature_matrix(corpus.dimension()), release.observed_labels());
    let forest = ForestConfig { n_trees: trees, ..ForestConfig::default() }.with_weighting(ClassWeighting::Balanced);
    let purpose_seed = seed::derive(seed, "clean", u64::from(release_index));

    let verdicts = match method {
        CleanMethod::Cl => {
            let options = ConfidentOptions { ratio_override: ratio, ..Default::default() };
            confident_learning_select(&dataset, &forest, &options, purpose_seed)?
        }
        CleanMethod::OneStage => select_reliable_negatives(&dataset, margin)?,
        CleanMethod::TwoStage => {
            let stage_one = select_reliable_negatives(&dataset, margin)?;
            let labels = two_stage_relabel(&dataset, &stage_one, &forest, purpose_seed)?;
            let index = dataset.index();
            stage_one
                .into_iter()
                .map(|v| {
                    let relabeled = labels[index[v.sample_id.as_str()]] != 0;
                    let decision = if relabeled { Decision::SuspectedVulnerable } else { Decision::ReliableNegative };
                    NoiseVerdict { decision, ..v }
                })
                .collect()
        }
        CleanMethod::OneClass => one_class_verdicts(&dataset, k)?,
    };

    let truth_of: std::collections::HashMap<&str, Truth> =
        release.samples.iter().map(|s| (s.id.as_str(), s.truth)).collect();
    let suspected: Vec<bool> = verdicts.iter().map(NoiseVerdict::is_suspected).collect();
    let noisy: Vec<bool> = verdicts.iter().map(|v| truth_of[v.sample_id.as_str()].is_noisy()).collect();
    let metrics = identification_metrics(&suspected, &noisy);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "decision", "score"])?;
    for v in &verdicts {
        w.write_record([v.sample_id.as_str(), &v.decision.to_string(), &format!("{:?}", v.score)])?;
    }
    write_file(&out.join("verdicts.csv"), w.into_inner().map_err(|e| anyhow!("{e}"))?)?;

    #[derive(Serialize)]
    struct MetricsDoc<'a> {
        method: &'a str,
        release: u32,
        #[serde(flatten)]
        metrics: &'a IdentificationMetrics,
    }
    let doc = MetricsDoc { method: method.id(), release: release_index, metrics: &metrics };
    write_file(&out.join("metrics.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    println!(
        "{}: {} of {} unlabeled suspected; recall {}, precision {}",
        method.id(),
        metrics.suspected,
        metrics.unlabeled,
        metrics.recall.map_or("NA".into(), |v| format!("{v:.3}")),
        metrics.precision.map_or("NA".into(), |v| format!("{v:.3}")),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_identification() {
        let flags = [true, false, true, false];
        let m = identification_metrics(&flags, &flags);
        assert_eq!((m.recall, m.precision), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn nothing_flagged() {
        let m = identification_metrics(&[false; 4], &[true, false, false, false]);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.precision, None);
        assert_eq!(m.pu_gmean, Some(0.0));
    }

    #[test]
    fn two_of_four_among_ten_flags() {
        // 20 unlabeled: 4 hidden noisy (0..4), 10 flags covering 2 of them.
        let noisy: Vec<bool> = (0..20).map(|i| i < 4).collect();
        let flagged: Vec<bool> = (0..20).map(|i| i < 2 || (4..12).contains(&i)).collect();
        let m = identification_metrics(&flagged, &noisy);
        assert_eq!(m.suspected, 10);
        assert!((m.recall.unwrap() - 0.5).abs() < 1e-12);
        assert!((m.precision.unwrap() - 0.2).abs() < 1e-12);
        // recall^2 / (10 / 20)
        assert!((m.pu_gmean.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_annotations_means_not_applicable() {
        let m = identification_metrics(&[true, false], &[false, false]);
        assert_eq!((m.recall, m.precision, m.pu_gmean), (None, None, None));
    }
}
