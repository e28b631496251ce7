use std::path::PathBuf;

use anyhow::Context;
use svnoise::corpus::save_corpus;
use svnoise::synthgen::{generate_synthetic_corpus, SynthConfig};

use crate::{config, usage, CliResult};

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    /// JSON file with generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    releases: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    true_positive_rate: Option<f64>,
    #[arg(long)]
    hide_rate: Option<f64>,
    /// Number of vulnerability types; resets per-type biases and latencies.
    #[arg(long)]
    type_count: Option<usize>,
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
}

/// Generator fields are checked when merged into [`SynthConfig`].
#[derive(serde::Deserialize, Default)]
struct SynthFile {
    seed: Option<u64>,
    #[serde(flatten)]
    generator: serde_json::Map<String, serde_json::Value>,
}

fn build_config(args: &SynthArgs) -> CliResult<SynthConfig> {
    let file: SynthFile = config::load(args.config.as_deref())?;
    let seed = config::required(args.seed, file.seed, "seed")?;
    let mut cfg = match args.type_count {
        Some(t) => SynthConfig::with_types(t),
        None => SynthConfig::default(),
    };
    if !file.generator.is_empty() {
        let mut base = serde_json::to_value(&cfg)?;
        let obj = base.as_object_mut().expect("config serializes to an object");
        for (k, v) in file.generator {
            obj.insert(k, v);
        }
        cfg = match serde_json::from_value(base) {
            Ok(c) => c,
            Err(e) => return usage(format!("invalid generator config: {e}")),
        };
    }
    cfg.seed = seed;
    if let Some(t) = args.type_count {
        let fresh = SynthConfig::with_types(t);
        cfg.type_count = t;
        cfg.per_type_hide_bias = fresh.per_type_hide_bias;
        cfg.type_latency_days = fresh.type_latency_days;
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { cfg.$field = v; })*
        };
    }
    set!(releases => releases, samples => samples_per_release, dimension => dimension,
         true_positive_rate => true_positive_rate, hide_rate => hide_rate, drift => drift,
         separation => separation);
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    Ok(cfg)
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let cfg = build_config(args)?;
    let corpus = generate_synthetic_corpus(&cfg)?;
    save_corpus(&corpus, &args.out).with_context(|| format!("writing corpus to {}", args.out.display()))?;
    eprintln!(
        "wrote {} releases x {} samples to {}",
        cfg.releases,
        cfg.samples_per_release,
        args.out.display()
    );
    Ok(())
}
