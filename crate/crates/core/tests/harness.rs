use std::collections::HashSet;
use std::sync::Mutex;

use rand::Rng;
use svnoise::corpus::{Corpus, Observed, Truth};
use svnoise::evalstat::{
    auc, default_config, fit_and_score, fold_plan, next_release_validate, next_release_validate_with, tune,
    CorpusTruth, HarnessOptions, Method, ThresholdSource, TruthOracle,
};
use svnoise::nll::Dataset;
use svnoise::seed;
use svnoise::synthgen::{generate_synthetic_corpus, SynthConfig};

fn small(releases: usize, hide_rate: f64) -> Corpus {
    let cfg = SynthConfig {
        releases,
        samples_per_release: 200,
        dimension: 6,
        true_positive_rate: 0.15,
        hide_rate,
        seed: 21,
        ..Default::default()
    };
    generate_synthetic_corpus(&cfg).unwrap()
}

fn options(methods: Vec<Method>) -> HarnessOptions {
    HarnessOptions { methods, budget: 3, seed: 5, threshold: ThresholdSource::TestRoc }
}

struct Tracking<'a> {
    inner: CorpusTruth<'a>,
    seen: Mutex<HashSet<usize>>,
}

impl TruthOracle for Tracking<'_> {
    fn truth(&self, release_pos: usize, row: usize) -> Truth {
        self.seen.lock().unwrap().insert(release_pos);
        self.inner.truth(release_pos, row)
    }
}

fn non_oracle_methods() -> Vec<Method> {
    Method::ALL.into_iter().filter(|m| !m.uses_truth()).collect()
}

#[test]
fn only_the_oracle_method_reads_training_truth() {
    let corpus = small(3, 0.5);
    let tracker = Tracking { inner: CorpusTruth(&corpus), seen: Mutex::new(HashSet::new()) };
    next_release_validate_with(&corpus, &tracker, &options(non_oracle_methods())).unwrap();
    assert_eq!(*tracker.seen.lock().unwrap(), HashSet::from([2]));

    let tracker = Tracking { inner: CorpusTruth(&corpus), seen: Mutex::new(HashSet::new()) };
    next_release_validate_with(&corpus, &tracker, &options(vec![Method::SemiOptimal])).unwrap();
    assert_eq!(*tracker.seen.lock().unwrap(), HashSet::from([0, 1, 2]));
}

#[test]
fn sample_truth_fields_are_never_consulted_directly() {
    let corpus = small(3, 0.5);
    // Same observations, different annotations on the training and validation releases.
    let mut rng = seed::rng(1);
    let mut releases = corpus.clone().into_releases();
    for release in &mut releases[..2] {
        for s in &mut release.samples {
            if s.observed == Observed::Unlabeled {
                s.truth = if rng.random_bool(0.5) { Truth::Silent } else { Truth::CleanUnknown };
                s.latency_days = None;
            }
        }
    }
    let altered = Corpus::new(releases, corpus.dimension()).unwrap();
    let oracle = CorpusTruth(&corpus);
    let opts = options(non_oracle_methods());
    let a = next_release_validate_with(&corpus, &oracle, &opts).unwrap();
    let b = next_release_validate_with(&altered, &oracle, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fold_ids_are_disjoint_from_test_release() {
    let corpus = generate_synthetic_corpus(&SynthConfig { samples_per_release: 100, ..Default::default() }).unwrap();
    let plans = fold_plan(corpus.releases().len()).unwrap();
    assert_eq!(plans.len(), 10);
    for plan in plans {
        let releases = corpus.releases();
        let test: HashSet<String> = releases[plan.test].ids().into_iter().collect();
        for pos in [plan.train, plan.validation] {
            assert!(pos < plan.test);
            assert!(releases[pos].ids().iter().all(|id| !test.contains(id)));
        }
    }
}

#[test]
fn no_hidden_labels_makes_oracle_equal_baseline() {
    let corpus = small(4, 0.0);
    let report = next_release_validate(&corpus, &options(vec![Method::Baseline, Method::SemiOptimal])).unwrap();
    let base: Vec<_> = report.folds.iter().filter(|f| f.method == Method::Baseline).collect();
    let semi: Vec<_> = report.folds.iter().filter(|f| f.method == Method::SemiOptimal).collect();
    assert_eq!(base.len(), 2);
    for (b, s) in base.iter().zip(&semi) {
        let mut s = (*s).clone();
        s.method = Method::Baseline;
        assert_eq!(**b, s);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let corpus = small(4, 0.6);
    let opts = options(vec![Method::ConfidentLearning, Method::PostProcessing, Method::BaselineRos]);
    let a = next_release_validate(&corpus, &opts).unwrap();
    let b = next_release_validate(&corpus, &opts).unwrap();
    assert_eq!(a.folds_csv(), b.folds_csv());
    assert_eq!(a.summary_json(), b.summary_json());
}

#[test]
fn validation_threshold_option_runs() {
    let corpus = small(3, 0.5);
    let opts = HarnessOptions { threshold: ThresholdSource::ValidationRoc, ..options(vec![Method::TwoStage]) };
    let report = next_release_validate(&corpus, &opts).unwrap();
    assert_eq!(report.folds.len(), 1);
    assert!(report.folds[0].threshold.is_finite() || report.folds[0].threshold == f64::INFINITY);
}

#[test]
fn search_never_loses_to_the_default_configuration() {
    let corpus = small(3, 0.0);
    let d = corpus.dimension();
    let (train, val) = (&corpus.releases()[0], &corpus.releases()[1]);
    let train = Dataset::new(train.ids(), train.feature_matrix(d), train.observed_labels());
    let val_x = val.feature_matrix(d);
    let val_y = val.observed_labels();
    for method in [Method::Baseline, Method::TwoStage, Method::OneClass] {
        let outcome = tune(method, &train, &val_x, &val_y, 6, 8).unwrap();
        let default_scores = fit_and_score(method, &default_config(method), &train, &val_x, seed::derive(8, "trial", 0)).unwrap();
        assert!(outcome.validation_auc.unwrap() >= auc(&default_scores, &val_y).unwrap());
    }
}
