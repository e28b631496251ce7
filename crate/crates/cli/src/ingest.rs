use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;
use svnoise::corpus::{
    embed_tokens, filter_and_clean, save_corpus, Corpus, DocumentFrequency, Observed, Release, Sample, Truth,
    DEFAULT_EMBED_DIMS,
};

use crate::{usage, CliResult};

pub const LABELS_HEADER: &str = "release,path,observed,truth,type_tag,latency_days";

#[derive(clap::Args)]
pub struct IngestArgs {
    /// Directory holding one `release_<index>/` source tree per release.
    #[arg(long)]
    source: PathBuf,
    /// CSV with header `release,path,observed,truth,type_tag,latency_days`.
    /// Files without a row are unlabeled; an empty truth cell follows `observed`.
    #[arg(long)]
    labels: PathBuf,
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    /// Embedding dimension.
    #[arg(long, default_value_t = DEFAULT_EMBED_DIMS)]
    dims: usize,
}

#[derive(Deserialize)]
struct LabelRow {
    release: u32,
    path: String,
    observed: String,
    truth: Option<String>,
    type_tag: Option<String>,
    latency_days: Option<u32>,
}

struct Label {
    observed: Observed,
    truth: Truth,
    type_tag: Option<String>,
    latency_days: Option<u32>,
}

fn read_labels(path: &Path) -> anyhow::Result<HashMap<(u32, String), Label>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != LABELS_HEADER {
        bail!("{}: unexpected header, want {LABELS_HEADER}", path.display());
    }
    let mut labels = HashMap::new();
    for (i, row) in rdr.deserialize::<LabelRow>().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 2))?;
        let observed: Observed = row.observed.parse().map_err(|e| anyhow!("row {}: {e}", i + 2))?;
        let truth = match row.truth.as_deref() {
            Some(t) => t.parse().map_err(|e| anyhow!("row {}: {e}", i + 2))?,
            None if observed == Observed::Positive => Truth::Reported,
            None => Truth::CleanUnknown,
        };
        let label = Label { observed, truth, type_tag: row.type_tag, latency_days: row.latency_days };
        if labels.insert((row.release, row.path.clone()), label).is_some() {
            bail!("duplicate label row for release {} path {}", row.release, row.path);
        }
    }
    Ok(labels)
}

fn release_dirs(source: &Path) -> anyhow::Result<Vec<(u32, PathBuf)>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(source).with_context(|| format!("reading {}", source.display()))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(index) = name.strip_prefix("release_").and_then(|s| s.parse::<u32>().ok()) {
            if entry.file_type()?.is_dir() {
                dirs.push((index, entry.path()));
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Files below `root` as sorted `/`-separated relative paths.
fn source_files(root: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
            let entry = entry?;
            let path = entry.path();
            if entry.file_type()?.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root)?;
                let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push((rel.join("/"), path));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn ingest(args: &IngestArgs) -> CliResult {
    if args.dims == 0 {
        return usage("--dims must be positive");
    }
    let mut labels = read_labels(&args.labels)?;
    let dirs = release_dirs(&args.source)?;
    if dirs.is_empty() {
        return Err(anyhow!("no release_<index> directories under {}", args.source.display()).into());
    }

    let mut cleaned: Vec<(u32, Vec<(String, String)>)> = Vec::new();
    for (index, dir) in &dirs {
        let mut files = Vec::new();
        for (rel, path) in source_files(dir)? {
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            if let Some(text) = filter_and_clean(&rel, &String::from_utf8_lossy(&bytes)) {
                files.push((rel, text));
            }
        }
        cleaned.push((*index, files));
    }
    // Document frequencies come from the earliest release only.
    let table = DocumentFrequency::from_documents(cleaned[0].1.iter().map(|(_, t)| t.as_str()));

    let mut releases = Vec::new();
    for (index, files) in &cleaned {
        let samples = files
            .iter()
            .map(|(rel, text)| {
                let label = labels.remove(&(*index, rel.clone()));
                let (observed, truth, type_tag, latency_days) = match label {
                    Some(l) => (l.observed, l.truth, l.type_tag, l.latency_days),
                    None => (Observed::Unlabeled, Truth::CleanUnknown, None, None),
                };
                Sample {
                    id: format!("{index}:{rel}"),
                    path: rel.clone(),
                    features: embed_tokens(text, args.dims, &table),
                    observed,
                    truth,
                    type_tag,
                    latency_days,
                }
            })
            .collect();
        releases.push(Release { index: *index, samples });
    }
    let kept: usize = releases.iter().map(|r| r.samples.len()).sum();
    let corpus = Corpus::new(releases, args.dims)?;
    save_corpus(&corpus, &args.out).with_context(|| format!("writing corpus to {}", args.out.display()))?;
    eprintln!("ingested {kept} files from {} releases", dirs.len());
    if !labels.is_empty() {
        eprintln!("{} label rows matched no kept file", labels.len());
    }
    Ok(())
}
