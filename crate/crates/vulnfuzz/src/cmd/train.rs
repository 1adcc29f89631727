use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use vulnfuzz_core::gnn::{evaluate, init_params, train_from, FeatureScaling, GnnError, Hyperparams};

use super::{
    data_err, opt_path_str, parse_positive, path_str, read_text, write_with_manifest, CliError, CliResult,
};
use crate::formats::{load_checkpoint, read_corpus, save_checkpoint};
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Held-out corpus to evaluate on; the training corpus is used otherwise.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Embedding size d.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: u32,
    /// Layers n of the aggregation network.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub depth: u32,
    /// Embedding rounds T.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub iters: u32,
    #[arg(long, default_value_t = 0.01, value_parser = parse_positive)]
    pub lr: f64,
    /// Total epochs, counting those already done by a resumed checkpoint.
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics path; defaults to `<out>.metrics.json`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Continue from this checkpoint; its architecture overrides --dim/--depth/--iters.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Standardize attribute slots with training-set statistics.
    #[arg(long)]
    pub standardize: bool,
    /// K values for accuracy@K; defaults to 10, 50, 100, 200 and the full set.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
}

#[derive(Serialize)]
struct Metrics {
    eval_set: String,
    eval_size: usize,
    train_size: usize,
    epochs: usize,
    accuracy_at_k: BTreeMap<String, f64>,
    recall: f64,
    mean_loss: f64,
    loss_trace: Vec<f64>,
}

fn gnn_data(e: GnnError) -> CliError {
    CliError::Data(e.to_string())
}

pub fn run(a: TrainArgs) -> CliResult {
    let corpus = read_corpus(&read_text(&a.corpus)?, None).map_err(data_err(&a.corpus))?;
    if corpus.is_empty() {
        return Err(CliError::Data(format!("{}: empty corpus", a.corpus.display())));
    }
    let attr_dim = corpus[0].graph.blocks.first().map_or(0, |b| b.attrs.len());
    let mut hyper = Hyperparams {
        attr_dim,
        embed_dim: a.dim as usize,
        depth: a.depth as usize,
        iterations: a.iters as usize,
        learning_rate: a.lr,
        epochs: a.epochs,
        rng_seed: a.seed,
        standardize: a.standardize,
    };

    let (params, start) = match &a.resume {
        Some(path) => {
            let ck = load_checkpoint(&read_text(path)?).map_err(data_err(path))?;
            if ck.attr_dim != attr_dim {
                return Err(CliError::Data(format!(
                    "checkpoint expects {} attributes but the corpus has {attr_dim}",
                    ck.attr_dim
                )));
            }
            hyper = ck.hyperparams(&hyper);
            let start = ck.epochs_done.unwrap_or(0).min(hyper.epochs);
            (ck.params, start)
        }
        None => {
            hyper.check().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut params = init_params(&hyper).map_err(gnn_data)?;
            if hyper.standardize {
                params.scaling = Some(FeatureScaling::fit(corpus.iter().map(|s| &s.graph), attr_dim));
            }
            (params, 0)
        }
    };

    let out = train_from(params, &corpus, &hyper, start).map_err(gnn_data)?;

    let (eval_set, eval) = match &a.test {
        Some(path) => (path_str(path), read_corpus(&read_text(path)?, Some(attr_dim)).map_err(data_err(path))?),
        None => ("train".to_string(), corpus.clone()),
    };
    let n = eval.len();
    let ks: Vec<usize> = if a.k.is_empty() {
        let mut ks: Vec<usize> = [10, 50, 100, 200].into_iter().filter(|&k| k < n).collect();
        ks.push(n);
        ks
    } else {
        a.k.clone()
    };
    let report = evaluate(&eval, &out.params, &hyper, &ks).map_err(|e| match e {
        GnnError::KOutOfRange { .. } => CliError::Usage(e.to_string()),
        other => gnn_data(other),
    })?;

    let manifest = Manifest::new("train")
        .flag("corpus", path_str(&a.corpus))
        .flag("test", opt_path_str(&a.test))
        .flag("dim", hyper.embed_dim)
        .flag("depth", hyper.depth)
        .flag("iters", hyper.iterations)
        .flag("lr", hyper.learning_rate)
        .flag("epochs", hyper.epochs)
        .flag("resume", opt_path_str(&a.resume))
        .flag("standardize", hyper.standardize)
        .flag("k", &ks)
        .seed("seed", a.seed);
    let checkpoint = save_checkpoint(&out.params, hyper.iterations, Some(hyper.epochs));
    write_with_manifest(&a.out, &checkpoint, &manifest)?;

    let metrics = Metrics {
        eval_set,
        eval_size: n,
        train_size: corpus.len(),
        epochs: hyper.epochs,
        accuracy_at_k: report.accuracy_at_k.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        recall: report.recall,
        mean_loss: report.mean_loss,
        loss_trace: out.loss_trace,
    };
    let metrics_path = a.metrics.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".metrics.json");
        PathBuf::from(p)
    });
    let mut text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    text.push('\n');
    write_with_manifest(&metrics_path, &text, &manifest)?;

    for (k, v) in &report.accuracy_at_k {
        out!("accuracy@{k}\t{v:.4}");
    }
    out!("recall\t{:.4}", report.recall);
    out!("mean_loss\t{:.6}", report.mean_loss);
    Ok(())
}
