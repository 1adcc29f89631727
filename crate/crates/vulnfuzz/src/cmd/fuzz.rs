use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use vulnfuzz_core::fuzz::{
    run_campaign, CampaignConfig, CampaignError, CampaignHooks, CampaignReport, FitnessMode, GenerationStats,
};
use vulnfuzz_core::scoring::FitnessCount;
use vulnfuzz_core::vm::VmTarget;

use super::predict::load_program;
use super::{data_err, opt_path_str, path_str, read_text, write_bytes, CliError, CliResult};
use crate::formats::{report_csv, report_to_json, svs_from_json, ReportMeta};
use crate::manifest::Manifest;
use crate::parallel::Parallel;

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("fitness").required(true).args(["svs", "coverage_mode"]))]
pub struct FuzzArgs {
    /// VM program in assembly text.
    #[arg(long)]
    pub target: PathBuf,
    /// Directory of initial inputs, one per file, read in file-name order.
    #[arg(long)]
    pub seeds_dir: PathBuf,
    /// Score dump; selects svs_sum fitness.
    #[arg(long)]
    pub svs: Option<PathBuf>,
    /// Score each input by the number of blocks it covered first.
    #[arg(long)]
    pub coverage_mode: bool,
    #[arg(long, default_value_t = 50)]
    pub pop: usize,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
    #[arg(long, default_value_t = 8)]
    pub ini_cw: u32,
    #[arg(long, default_value_t = 2)]
    pub min_cw: u32,
    #[arg(long, default_value_t = 64)]
    pub max_cw: u32,
    #[arg(long, default_value_t = 100_000)]
    pub budget_execs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report.json, timeseries.csv and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub step_limit: u64,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[arg(long)]
    pub stop_on_first_crash: bool,
    /// Grow the crash window faster, for targets with text-like inputs.
    #[arg(long)]
    pub cwj_text_mode: bool,
    /// Count each distinct block once in svs_sum fitness.
    #[arg(long)]
    pub fitness_dedup_blocks: bool,
    /// Seed pool capacity; defaults to 4 x topk.
    #[arg(long)]
    pub pool_capacity: Option<usize>,
    /// Worker threads per generation. Results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    /// Wall-clock limit checked between generations. Makes the run timing dependent.
    #[arg(long)]
    pub budget_secs: Option<u64>,
    /// Exit with status 1 when the campaign finds no crash.
    #[arg(long)]
    pub require_crash: bool,
}

struct Deadline(Option<(Instant, Duration)>);

impl CampaignHooks for Deadline {
    fn should_stop(&mut self, _stats: &GenerationStats) -> bool {
        self.0.is_some_and(|(start, limit)| start.elapsed() >= limit)
    }
}

pub(crate) fn read_seeds(dir: &Path) -> CliResult<Vec<Vec<u8>>> {
    let err = |e: std::io::Error| CliError::Data(format!("{}: {e}", dir.display()));
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    files.retain(|p| p.is_file());
    files.sort();
    if files.is_empty() {
        return Err(CliError::Data(format!("{}: no seed files", dir.display())));
    }
    files.iter().map(|p| fs::read(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))).collect()
}

fn classify(e: CampaignError) -> CliError {
    match e {
        CampaignError::Population { .. } | CampaignError::Budget | CampaignError::Cwj(_) | CampaignError::MissingSvs => {
            CliError::Usage(e.to_string())
        }
        CampaignError::NoInitialInputs | CampaignError::Svs(_) | CampaignError::Unscored(_) => {
            CliError::Data(e.to_string())
        }
        CampaignError::Target(_) => CliError::Runtime(e.to_string()),
    }
}

pub fn run(a: FuzzArgs) -> CliResult {
    let program = load_program(&a.target)?;
    let seeds = read_seeds(&a.seeds_dir)?;
    let svs = match &a.svs {
        Some(path) => Some(svs_from_json(&read_text(path)?).map_err(data_err(path))?),
        None => None,
    };
    let config = CampaignConfig {
        population: a.pop,
        top_k: a.topk,
        pool_capacity: a.pool_capacity,
        ini_cw: a.ini_cw,
        min_cw: a.min_cw,
        max_cw: a.max_cw,
        cwj_text_mode: a.cwj_text_mode,
        fitness_mode: if a.coverage_mode { FitnessMode::CoverageCount } else { FitnessMode::SvsSum },
        fitness_count: if a.fitness_dedup_blocks { FitnessCount::UniqueBlocks } else { FitnessCount::PerVisit },
        step_limit: a.step_limit,
        max_execs: a.budget_execs,
        max_generations: a.max_generations,
        stop_on_first_crash: a.stop_on_first_crash,
        rng_seed: a.seed,
    };
    config.check().map_err(classify)?;

    let target = VmTarget::new(program);
    let names = target.program().function_names();
    let adapter = Parallel::new(&target, a.jobs as usize);
    let mut hooks = Deadline(a.budget_secs.map(|s| (Instant::now(), Duration::from_secs(s))));
    let (report, failure) = match run_campaign(&adapter, svs.as_ref(), &seeds, &config, &mut hooks) {
        Ok(r) => (r, None),
        Err(abort) => (abort.partial, Some(abort.error)),
    };
    if let Some(e) = failure.as_ref().filter(|e| !matches!(e, CampaignError::Target(_))) {
        return Err(classify(e.clone()));
    }

    write_outputs(&a, &config, &report, &names)?;
    if let Some(e) = failure {
        return Err(classify(e));
    }
    out!(
        "{} executions, {} generations, {} unique crashes, {} blocks covered, stopped by {}",
        report.total_executions,
        report.generations.len(),
        report.crash_catalog.len(),
        report.covered_blocks.len(),
        report.stop_reason.as_str()
    );
    if a.require_crash && report.crash_catalog.is_empty() {
        return Err(CliError::NoCrash);
    }
    Ok(())
}

fn write_outputs(a: &FuzzArgs, config: &CampaignConfig, report: &CampaignReport, names: &[String]) -> CliResult {
    let meta = ReportMeta {
        target: path_str(&a.target),
        fitness_mode: config.fitness_mode.as_str().to_string(),
        rng_seed: a.seed,
        budget_execs: a.budget_execs,
        population: a.pop,
        top_k: a.topk,
    };
    let report_path = a.out.join("report.json");
    let csv_path = a.out.join("timeseries.csv");
    let manifest = Manifest::new("fuzz")
        .flag("target", path_str(&a.target))
        .flag("seeds_dir", path_str(&a.seeds_dir))
        .flag("svs", opt_path_str(&a.svs))
        .flag("coverage_mode", a.coverage_mode)
        .flag("pop", a.pop)
        .flag("topk", a.topk)
        .flag("ini_cw", a.ini_cw)
        .flag("min_cw", a.min_cw)
        .flag("max_cw", a.max_cw)
        .flag("budget_execs", a.budget_execs)
        .flag("step_limit", a.step_limit)
        .flag("max_generations", a.max_generations)
        .flag("stop_on_first_crash", a.stop_on_first_crash)
        .flag("cwj_text_mode", a.cwj_text_mode)
        .flag("fitness_dedup_blocks", a.fitness_dedup_blocks)
        .flag("pool_capacity", config.capacity())
        .flag("jobs", a.jobs)
        .flag("budget_secs", a.budget_secs)
        .seed("seed", a.seed)
        .output(&report_path)
        .output(&csv_path);
    write_bytes(&report_path, report_to_json(report, meta, names).as_bytes())?;
    write_bytes(&csv_path, report_csv(report).as_bytes())?;
    write_bytes(&a.out.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(())
}
