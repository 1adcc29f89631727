use std::path::PathBuf;

use clap::Args;
use vulnfuzz_core::synth::{generate, split, SynthError, SynthSpec};

use super::{parse_fraction, parse_unit, path_str, write_with_manifest, CliError, CliResult};
use crate::formats::write_corpus;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_test: PathBuf,
    /// Total number of graphs, half of each class.
    #[arg(long, default_value_t = 2000)]
    pub count: usize,
    /// Probability that a vulnerable graph carries the planted signal.
    #[arg(long, default_value_t = 1.0, value_parser = parse_unit)]
    pub signal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8, value_parser = parse_fraction)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 3)]
    pub min_blocks: usize,
    #[arg(long, default_value_t = 12)]
    pub max_blocks: usize,
}

pub fn run(a: GenDataArgs) -> CliResult {
    if a.count == 0 {
        return Err(CliError::Usage("empty corpus requested".to_string()));
    }
    let spec = SynthSpec {
        per_class: a.count.div_ceil(2),
        blocks: (a.min_blocks, a.max_blocks),
        signal_strength: a.signal,
        rng_seed: a.seed,
        ..SynthSpec::default()
    };
    let usage = |e: SynthError| CliError::Usage(e.to_string());
    let mut corpus = generate(&spec).map_err(usage)?;
    corpus.truncate(a.count);
    let (train, test) = split(&corpus, a.train_frac, a.seed).map_err(usage)?;

    let manifest = Manifest::new("gen-data")
        .flag("out_train", path_str(&a.out_train))
        .flag("out_test", path_str(&a.out_test))
        .flag("count", a.count)
        .flag("signal", a.signal)
        .flag("train_frac", a.train_frac)
        .flag("min_blocks", a.min_blocks)
        .flag("max_blocks", a.max_blocks)
        .flag("edge_density", spec.edge_density)
        .seed("seed", a.seed);
    write_with_manifest(&a.out_train, &write_corpus(&train), &manifest)?;
    write_with_manifest(&a.out_test, &write_corpus(&test), &manifest)?;
    out!("wrote {} training and {} test graphs", train.len(), test.len());
    Ok(())
}
