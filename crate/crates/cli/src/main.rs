//! `svnoise`: generate or ingest corpora, clean training labels, run the
//! next-release experiment and render reports.

mod clean;
mod config;
mod ingest;
mod plot;
mod report;
mod run;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use svnoise::corpus::{characterize_noise_with, load_corpus, CharacterizeOptions};

/// Failure classes, mapped onto exit codes 2 and 1.
#[derive(Debug)]
pub enum Failure {
    /// Invalid flags or configuration.
    Usage(String),
    /// Data, I/O or runtime error.
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

pub fn usage<T>(message: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(message.into()))
}

#[derive(Parser)]
#[command(name = "svnoise", version, about = "Learning vulnerability predictors from noisy negative labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with hidden positives.
    Synth(synth::SynthArgs),
    /// Turn per-release source trees and a labels file into a corpus.
    Ingest(ingest::IngestArgs),
    /// Run next-release validation for one or more methods.
    Run(run::RunArgs),
    /// Flag suspected noisy labels in one release and score the flags.
    Clean(clean::CleanArgs),
    /// Summarise hidden-positive types, latency and locations.
    Characterize(CharacterizeArgs),
    /// Aggregate folds.csv files into a table and charts.
    Report(report::ReportArgs),
}

#[derive(clap::Args)]
struct CharacterizeArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Categories with fewer occurrences are left out of the tests.
    #[arg(long, default_value_t = 10)]
    min_count: usize,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn characterize(args: &CharacterizeArgs) -> CliResult {
    let corpus = load_corpus(&args.corpus).with_context(|| format!("loading {}", args.corpus.display()))?;
    let report = characterize_noise_with(&corpus, CharacterizeOptions { min_category_count: args.min_count });
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => write_file(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

/// Write `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => synth::synth(a),
        Command::Ingest(a) => ingest::ingest(a),
        Command::Run(a) => run::run(a),
        Command::Clean(a) => clean::clean(a),
        Command::Characterize(a) => characterize(a),
        Command::Report(a) => report::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
