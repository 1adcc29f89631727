use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use super::{data_err, opt_path_str, path_str, read_text, write_with_manifest, CliResult};
use crate::formats::{report_from_json, ReportDoc};
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Campaign report.json.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the summary as JSON here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary<'a> {
    target: &'a str,
    fitness_mode: &'a str,
    rng_seed: u64,
    total_executions: u64,
    generations: usize,
    first_crash_exec: Option<u64>,
    unique_crashes: usize,
    covered_blocks: usize,
    stop_reason: &'a str,
    crashes: Vec<String>,
}

fn summarize(doc: &ReportDoc) -> Summary<'_> {
    Summary {
        target: &doc.meta.target,
        fitness_mode: &doc.meta.fitness_mode,
        rng_seed: doc.meta.rng_seed,
        total_executions: doc.total_executions,
        generations: doc.generations.len(),
        first_crash_exec: doc.first_crash_exec,
        unique_crashes: doc.unique_crashes,
        covered_blocks: doc.covered_block_count,
        stop_reason: &doc.stop_reason,
        crashes: doc
            .crash_catalog
            .iter()
            .map(|c| {
                let bug = c.bug_id.map(|b| format!(" bug {b}")).unwrap_or_default();
                format!("{} at {}:{}{bug}, first at exec {}", c.kind, c.function, c.block, c.first_exec)
            })
            .collect(),
    }
}

pub fn run(a: ReportArgs) -> CliResult {
    let doc = report_from_json(&read_text(&a.input)?).map_err(data_err(&a.input))?;
    let s = summarize(&doc);
    out!("target\t{}", s.target);
    out!("fitness_mode\t{}", s.fitness_mode);
    out!("rng_seed\t{}", s.rng_seed);
    out!("executions\t{}", s.total_executions);
    out!("generations\t{}", s.generations);
    out!("first_crash_exec\t{}", s.first_crash_exec.map_or("-".to_string(), |e| e.to_string()));
    out!("unique_crashes\t{}", s.unique_crashes);
    out!("covered_blocks\t{}", s.covered_blocks);
    out!("stop_reason\t{}", s.stop_reason);
    for c in &s.crashes {
        out!("crash\t{c}");
    }
    if let Some(out) = &a.out {
        let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
        text.push('\n');
        let manifest = Manifest::new("report").flag("input", path_str(&a.input)).flag("out", opt_path_str(&a.out));
        write_with_manifest(out, &text, &manifest)?;
    }
    Ok(())
}
