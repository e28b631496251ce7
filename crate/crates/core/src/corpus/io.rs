//! On-disk corpus layout.
//!
//! ```text
//! <root>/release_<index>/features.csv   id,path,f0..f{D-1}
//! <root>/release_<index>/labels.csv     id,observed,truth,type_tag,latency_days
//! <root>/release_<index>/meta.json      {"index": .., "dimension": ..}
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a load/save
//! cycle reproduces files byte for byte.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Observed, Release, Sample, Truth};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    index: u32,
    dimension: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CorpusError + '_ {
    move |source| CorpusError::Csv { path: path.to_path_buf(), source }
}

fn record_err(path: &Path, message: impl Into<String>) -> CorpusError {
    CorpusError::Record { path: path.to_path_buf(), message: message.into() }
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn release_dir_index(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("release_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Load every `release_<index>/` directory under `root`.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let root = root.as_ref();
    let mut dirs: Vec<(u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let name = entry.file_name();
        let Some(index) = name.to_str().and_then(release_dir_index) else {
            continue;
        };
        if entry.path().is_dir() {
            dirs.push((index, entry.path()));
        }
    }
    dirs.sort_by_key(|(i, _)| *i);
    if dirs.is_empty() {
        return Err(CorpusError::Empty);
    }

    let mut releases = Vec::with_capacity(dirs.len());
    let mut dimension = None;
    for (index, dir) in dirs {
        let (release, dim) = load_release(index, &dir)?;
        match dimension {
            None => dimension = Some(dim),
            Some(expected) if expected != dim => {
                return Err(CorpusError::DimensionMismatch { release: index, expected, found: dim })
            }
            Some(_) => {}
        }
        releases.push(release);
    }
    Corpus::new(releases, dimension.unwrap_or(0))
}

fn load_release(index: u32, dir: &Path) -> Result<(Release, usize), CorpusError> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: Meta = serde_json::from_str(&meta_text)
        .map_err(|source| CorpusError::Meta { path: meta_path.clone(), source })?;
    if meta.index != index {
        return Err(record_err(
            &meta_path,
            format!("meta index {} does not match directory index {index}", meta.index),
        ));
    }
    let dim = meta.dimension;

    let feat_path = dir.join("features.csv");
    let mut rdr = csv::Reader::from_path(&feat_path).map_err(csv_err(&feat_path))?;
    let header = rdr.headers().map_err(csv_err(&feat_path))?.clone();
    let expected: Vec<String> = ["id".to_string(), "path".to_string()]
        .into_iter()
        .chain((0..dim).map(|j| format!("f{j}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        if header.len() >= 2 && header.len() - 2 != dim {
            return Err(CorpusError::DimensionMismatch {
                release: index,
                expected: dim,
                found: header.len() - 2,
            });
        }
        return Err(record_err(&feat_path, "unexpected features.csv header"));
    }

    let mut rows: Vec<(String, String, Vec<f64>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(&feat_path))?;
        let features = rec
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| record_err(&feat_path, format!("row {}: {e}", line + 1)))?;
        rows.push((rec[0].to_string(), rec[1].to_string(), features));
    }

    let labels_path = dir.join("labels.csv");
    let mut rdr = csv::Reader::from_path(&labels_path).map_err(csv_err(&labels_path))?;
    let header = rdr.headers().map_err(csv_err(&labels_path))?.clone();
    if header.iter().ne(["id", "observed", "truth", "type_tag", "latency_days"]) {
        return Err(record_err(&labels_path, "unexpected labels.csv header"));
    }
    type LabelRow = (Observed, Truth, Option<String>, Option<u32>);
    let mut labels: HashMap<String, LabelRow> = HashMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(&labels_path))?;
        let bad = |m: String| record_err(&labels_path, format!("row {}: {m}", line + 1));
        let observed: Observed = rec[1].parse().map_err(bad)?;
        let truth: Truth = rec[2].parse().map_err(bad)?;
        let type_tag = (!rec[3].is_empty()).then(|| rec[3].to_string());
        let latency = if rec[4].is_empty() {
            None
        } else {
            Some(rec[4].parse::<u32>().map_err(|e| bad(e.to_string()))?)
        };
        if labels
            .insert(rec[0].to_string(), (observed, truth, type_tag, latency))
            .is_some()
        {
            return Err(CorpusError::DuplicateId { release: index, id: rec[0].to_string() });
        }
    }
    if labels.len() != rows.len() {
        return Err(record_err(
            &labels_path,
            format!("{} label rows for {} feature rows", labels.len(), rows.len()),
        ));
    }

    let mut samples = Vec::with_capacity(rows.len());
    for (id, path, features) in rows {
        let Some((observed, truth, type_tag, latency_days)) = labels.remove(&id) else {
            return Err(record_err(&labels_path, format!("no label row for id {id:?}")));
        };
        samples.push(Sample { id, path, features, observed, truth, type_tag, latency_days });
    }
    Ok((Release { index, samples }, dim))
}

/// Write `corpus` under `root`, creating directories as needed.
pub fn save_corpus(corpus: &Corpus, root: impl AsRef<Path>) -> Result<(), CorpusError> {
    let root = root.as_ref();
    let dim = corpus.dimension();
    for release in corpus.releases() {
        let dir = root.join(format!("release_{}", release.index));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;

        let meta_path = dir.join("meta.json");
        let meta = Meta { index: release.index, dimension: dim };
        let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        text.push('\n');
        fs::write(&meta_path, text).map_err(io_err(&meta_path))?;

        let feat_path = dir.join("features.csv");
        let mut w = csv::Writer::from_path(&feat_path).map_err(csv_err(&feat_path))?;
        let mut header = vec!["id".to_string(), "path".to_string()];
        header.extend((0..dim).map(|j| format!("f{j}")));
        w.write_record(&header).map_err(csv_err(&feat_path))?;
        for s in &release.samples {
            let mut rec = Vec::with_capacity(dim + 2);
            rec.push(s.id.clone());
            rec.push(s.path.clone());
            rec.extend(s.features.iter().map(|&v| format_float(v)));
            w.write_record(&rec).map_err(csv_err(&feat_path))?;
        }
        w.flush().map_err(io_err(&feat_path))?;

        let labels_path = dir.join("labels.csv");
        let mut w = csv::Writer::from_path(&labels_path).map_err(csv_err(&labels_path))?;
        w.write_record(["id", "observed", "truth", "type_tag", "latency_days"])
            .map_err(csv_err(&labels_path))?;
        for s in &release.samples {
            w.write_record([
                s.id.clone(),
                s.observed.to_string(),
                s.truth.to_string(),
                s.type_tag.clone().unwrap_or_default(),
                s.latency_days.map(|d| d.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err(&labels_path))?;
        }
        w.flush().map_err(io_err(&labels_path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn release_dir_names() {
        assert_eq!(release_dir_index("release_12"), Some(12));
        assert_eq!(release_dir_index("release_"), None);
        assert_eq!(release_dir_index("release_1a"), None);
        assert_eq!(release_dir_index("rel_1"), None);
    }

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, -3.0, 1e-300, 1.0 / 3.0, f64::MAX, 123456.789e10] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
