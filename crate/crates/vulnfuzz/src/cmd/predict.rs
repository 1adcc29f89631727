use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::Args;
use vulnfuzz_core::gnn::forward;
use vulnfuzz_core::scoring::{assign_svs, DEFAULT_KAPPA, DEFAULT_OMEGA};
use vulnfuzz_core::vm::{assemble, extract_acfg, Program};
use vulnfuzz_core::{Hyperparams, ProgramAcfg};

use super::{
    data_err, opt_path_str, parse_non_negative, parse_positive, parse_unit, path_str, read_text,
    write_with_manifest, CliError, CliResult,
};
use crate::formats::{acfg_from_json, load_checkpoint, svs_to_json, truth_from_json};
use crate::manifest::Manifest;

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["target", "acfg"]))]
#[command(group = clap::ArgGroup::new("model").required(true).args(["checkpoint", "oracle_svs"]))]
pub struct PredictArgs {
    /// VM program in assembly text.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Program ACFG document.
    #[arg(long)]
    pub acfg: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Ground-truth file; its bug functions get --oracle-p-vuln, all others --oracle-p-other.
    #[arg(long)]
    pub oracle_svs: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9, value_parser = parse_unit)]
    pub oracle_p_vuln: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_unit)]
    pub oracle_p_other: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA, value_parser = parse_non_negative)]
    pub kappa: f64,
    #[arg(long, default_value_t = DEFAULT_OMEGA, value_parser = parse_positive)]
    pub omega: f64,
    /// Score dump path.
    #[arg(long)]
    pub out: PathBuf,
}

pub(crate) fn load_program(path: &Path) -> CliResult<Program> {
    assemble(&read_text(path)?).map_err(|e| CliError::Data(format!("{}:{e}", path.display())))
}

pub fn run(a: PredictArgs) -> CliResult {
    let acfg: ProgramAcfg = match (&a.target, &a.acfg) {
        (Some(path), _) => extract_acfg(&load_program(path)?),
        (None, Some(path)) => acfg_from_json(&read_text(path)?).map_err(data_err(path))?.0,
        (None, None) => unreachable!("clap requires one input"),
    };

    let predictions: BTreeMap<String, f64> = match (&a.checkpoint, &a.oracle_svs) {
        (Some(path), _) => {
            let ck = load_checkpoint(&read_text(path)?).map_err(data_err(path))?;
            let hyper = ck.hyperparams(&Hyperparams::default());
            acfg.functions
                .iter()
                .filter(|f| !f.blocks.is_empty())
                .map(|f| {
                    forward(f, &ck.params, &hyper)
                        .map(|pred| (f.function_name.clone(), pred.p()))
                        .map_err(|e| CliError::Data(format!("{}: `{}`: {e}", path.display(), f.function_name)))
                })
                .collect::<CliResult<_>>()?
        }
        (None, Some(path)) => {
            let truth = truth_from_json(&read_text(path)?).map_err(data_err(path))?;
            let vulnerable: BTreeSet<&str> = truth.iter().map(|b| b.function.as_str()).collect();
            if let Some(f) = vulnerable.iter().find(|f| acfg.function(f).is_none()) {
                return Err(CliError::Data(format!("{}: unknown function `{f}`", path.display())));
            }
            acfg.functions
                .iter()
                .map(|f| {
                    let p = if vulnerable.contains(f.function_name.as_str()) { a.oracle_p_vuln } else { a.oracle_p_other };
                    (f.function_name.clone(), p)
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires one model"),
    };

    let blocks: Vec<(String, Vec<u32>)> =
        acfg.functions.iter().map(|f| (f.function_name.clone(), f.blocks.iter().map(|b| b.id).collect())).collect();
    let svs = assign_svs(&predictions, &blocks, a.kappa, a.omega).map_err(|e| CliError::Data(e.to_string()))?;

    let manifest = Manifest::new("predict")
        .flag("target", opt_path_str(&a.target))
        .flag("acfg", opt_path_str(&a.acfg))
        .flag("checkpoint", opt_path_str(&a.checkpoint))
        .flag("oracle_svs", opt_path_str(&a.oracle_svs))
        .flag("oracle_p_vuln", a.oracle_p_vuln)
        .flag("oracle_p_other", a.oracle_p_other)
        .flag("kappa", a.kappa)
        .flag("omega", a.omega)
        .flag("out", path_str(&a.out));
    write_with_manifest(&a.out, &svs_to_json(&svs), &manifest)?;

    out!("function\tp");
    for f in svs.functions() {
        out!("{}\t{:.6}", f.name, f.p);
    }
    Ok(())
}
