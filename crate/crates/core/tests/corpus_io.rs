use std::fs;
use std::path::{Path, PathBuf};

use svnoise::corpus::{load_corpus, save_corpus, CorpusError, Observed, Truth};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

#[test]
fn fixture_loads_with_expected_shape() {
    let corpus = load_corpus(fixture()).unwrap();
    assert_eq!(corpus.dimension(), 8);
    let indices: Vec<u32> = corpus.releases().iter().map(|r| r.index).collect();
    assert_eq!(indices, [3, 5]);
    assert!(corpus.releases().iter().all(|r| r.len() == 5));
    let latent = &corpus.releases()[0].samples[1];
    assert_eq!((latent.observed, latent.truth, latent.latency_days), (Observed::Unlabeled, Truth::Latent, Some(42)));
    assert_eq!(latent.type_tag.as_deref(), Some("CWE-416"));
    assert_eq!(corpus.releases()[0].samples[3].type_tag, None);
}

#[test]
fn save_reproduces_fixture_bytes() {
    let corpus = load_corpus(fixture()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&corpus, dir.path()).unwrap();
    for release in ["release_3", "release_5"] {
        for file in ["features.csv", "labels.csv", "meta.json"] {
            let original = fs::read(fixture().join(release).join(file)).unwrap();
            let written = fs::read(dir.path().join(release).join(file)).unwrap();
            assert_eq!(original, written, "{release}/{file}");
        }
    }
    assert_eq!(load_corpus(dir.path()).unwrap(), corpus);
}

#[test]
fn awkward_floats_round_trip() {
    let mut releases = load_corpus(fixture()).unwrap().into_releases();
    let weird = [0.1 + 0.2, 1e-300, -2.5e17, f64::MIN_POSITIVE, 1.0 / 3.0, -0.0, 123_456_789.123_456_78, 5e-324];
    releases[0].samples[0].features = weird.to_vec();
    let corpus = svnoise::corpus::Corpus::new(releases, 8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_corpus(&corpus, dir.path()).unwrap();
    let back = load_corpus(dir.path()).unwrap();
    let got = &back.releases()[0].samples[0].features;
    for (a, b) in weird.iter().zip(got) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn dimension_mismatch_between_releases_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    let meta = dir.path().join("release_3/meta.json");
    fs::write(&meta, "{\n  \"index\": 3,\n  \"dimension\": 4\n}\n").unwrap();
    let feats = dir.path().join("release_3/features.csv");
    let text: String = fs::read_to_string(&feats)
        .unwrap()
        .lines()
        .map(|l| l.split(',').take(6).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    fs::write(&feats, text).unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(CorpusError::DimensionMismatch { .. })));
}

#[test]
fn duplicate_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    for file in ["features.csv", "labels.csv"] {
        let path = dir.path().join("release_5").join(file);
        let text = fs::read_to_string(&path).unwrap().replace("r5-b", "r5-a");
        fs::write(&path, text).unwrap();
    }
    assert!(load_corpus(dir.path()).is_err());
}

#[test]
fn label_invariants_are_enforced() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(), dir.path());
    let path = dir.path().join("release_3/labels.csv");
    let text = fs::read_to_string(&path).unwrap().replace("r3-b,unlabeled,latent", "r3-b,positive,latent");
    fs::write(&path, text).unwrap();
    assert!(load_corpus(dir.path()).is_err());
}
