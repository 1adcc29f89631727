use std::path::PathBuf;

use clap::Args;
use vulnfuzz_core::vm::{disassemble, gen_target, BugPlan, CrashKind, PlannedBug};

use super::{opt_path_str, path_str, write_bytes, write_with_manifest, CliError, CliResult};
use crate::formats::{truth_to_json, TruthBug};
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct GenTargetArgs {
    /// Program path (assembly text).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth path.
    #[arg(long)]
    pub truth: PathBuf,
    /// Number of functions besides `main`.
    #[arg(long, default_value_t = 4)]
    pub functions: usize,
    /// Indices of functions allowed to hold bugs.
    #[arg(long, value_delimiter = ',')]
    pub vulnerable: Vec<usize>,
    /// Planted bug as FUNCTION:KIND:GUARD_BYTES, e.g. `1:oob_write:1`.
    #[arg(long, value_parser = parse_bug)]
    pub bug: Vec<PlannedBug>,
    #[arg(long, default_value_t = 32)]
    pub input_len: usize,
    #[arg(long, default_value_t = 3)]
    pub min_blocks: usize,
    #[arg(long, default_value_t = 8)]
    pub max_blocks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for an all-zero seed and one near-miss seed per bug.
    #[arg(long)]
    pub seeds_out: Option<PathBuf>,
}

fn parse_bug(s: &str) -> Result<PlannedBug, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [function, kind, depth] = parts[..] else {
        return Err(format!("expected FUNCTION:KIND:GUARD_BYTES, got `{s}`"));
    };
    Ok(PlannedBug {
        function: function.parse().map_err(|e| format!("function index: {e}"))?,
        kind: CrashKind::parse(kind).ok_or_else(|| format!("unknown crash kind `{kind}`"))?,
        guard_depth: depth.parse().map_err(|e| format!("guard bytes: {e}"))?,
    })
}

pub fn run(a: GenTargetArgs) -> CliResult {
    let mut vulnerable = a.vulnerable.clone();
    vulnerable.extend(a.bug.iter().map(|b| b.function).filter(|f| !a.vulnerable.contains(f)));
    vulnerable.sort_unstable();
    vulnerable.dedup();
    let plan = BugPlan {
        functions: a.functions,
        vulnerable,
        bugs: a.bug.clone(),
        input_len: a.input_len,
        blocks: (a.min_blocks, a.max_blocks),
    };
    let (program, truth) = gen_target(&plan, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;

    let bug_specs: Vec<String> =
        a.bug.iter().map(|b| format!("{}:{}:{}", b.function, b.kind.as_str(), b.guard_depth)).collect();
    let manifest = Manifest::new("gen-target")
        .flag("out", path_str(&a.out))
        .flag("truth", path_str(&a.truth))
        .flag("functions", a.functions)
        .flag("vulnerable", &plan.vulnerable)
        .flag("bug", bug_specs)
        .flag("input_len", a.input_len)
        .flag("min_blocks", a.min_blocks)
        .flag("max_blocks", a.max_blocks)
        .flag("seeds_out", opt_path_str(&a.seeds_out))
        .seed("seed", a.seed);
    write_with_manifest(&a.out, &disassemble(&program), &manifest)?;
    let docs: Vec<TruthBug> = truth.iter().map(TruthBug::from).collect();
    write_with_manifest(&a.truth, &truth_to_json(&docs), &manifest)?;

    if let Some(dir) = &a.seeds_out {
        write_bytes(&dir.join("zero.bin"), &vec![0u8; a.input_len])?;
        for b in &truth {
            write_bytes(&dir.join(format!("near_miss_{}.bin", b.id)), &b.near_miss())?;
        }
    }
    out!("{} functions, {} planted bugs", program.functions().len(), truth.len());
    Ok(())
}
