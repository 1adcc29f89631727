use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cwj::{cwj_step, CwjError, CwjState, MutationStrategy};
use super::mutate::{mutate_heavy, mutate_slight};
use super::pool::{select_seeds, CrashKey, Origin, Seed, SeedPool};
use crate::scoring::{FitnessCount, ScoreError, SvsMap};
use crate::vm::{BlockRef, ExecutionResult, TargetAdapter, TargetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessMode {
    /// Sum of static vulnerable scores along the path.
    #[default]
    SvsSum,
    /// Number of blocks the input covered for the first time.
    CoverageCount,
}

impl FitnessMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FitnessMode::SvsSum => "svs_sum",
            FitnessMode::CoverageCount => "coverage_count",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "svs_sum" => Some(FitnessMode::SvsSum),
            "coverage_count" => Some(FitnessMode::CoverageCount),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub population: usize,
    pub top_k: usize,
    /// Defaults to `4 * top_k` when `None`.
    pub pool_capacity: Option<usize>,
    pub ini_cw: u32,
    pub min_cw: u32,
    pub max_cw: u32,
    pub cwj_text_mode: bool,
    pub fitness_mode: FitnessMode,
    pub fitness_count: FitnessCount,
    pub step_limit: u64,
    /// Execution budget. A generation runs only if it fits entirely.
    pub max_execs: u64,
    pub max_generations: Option<usize>,
    pub stop_on_first_crash: bool,
    pub rng_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            population: 50,
            top_k: 10,
            pool_capacity: None,
            ini_cw: 8,
            min_cw: 2,
            max_cw: 64,
            cwj_text_mode: false,
            fitness_mode: FitnessMode::SvsSum,
            fitness_count: FitnessCount::PerVisit,
            step_limit: 100_000,
            max_execs: 100_000,
            max_generations: None,
            stop_on_first_crash: false,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CampaignError {
    #[error("population ({population}) must be >= top_k ({top_k}) >= 1")]
    Population { population: usize, top_k: usize },
    #[error("execution budget and step limit must be positive")]
    Budget,
    #[error(transparent)]
    Cwj(#[from] CwjError),
    #[error("at least one initial input is required")]
    NoInitialInputs,
    #[error("svs_sum fitness needs a score map")]
    MissingSvs,
    #[error(transparent)]
    Svs(#[from] ScoreError),
    #[error("no score for block {} of function #{}", .0.block, .0.func)]
    Unscored(BlockRef),
    #[error(transparent)]
    Target(#[from] TargetError),
}

impl CampaignConfig {
    pub fn check(&self) -> Result<(), CampaignError> {
        if self.top_k == 0 || self.population < self.top_k {
            return Err(CampaignError::Population { population: self.population, top_k: self.top_k });
        }
        if self.max_execs == 0 || self.step_limit == 0 {
            return Err(CampaignError::Budget);
        }
        CwjState::new(self.ini_cw, self.min_cw, self.max_cw)?;
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.pool_capacity.unwrap_or(4 * self.top_k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Cumulative executions after this generation.
    pub executions: u64,
    pub new_blocks: usize,
    pub unique_crashes: usize,
    pub covered_blocks: usize,
    /// Scheduler state after this generation.
    pub cw: u32,
    pub ms: MutationStrategy,
    pub zeta: u32,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashRecord {
    pub input: Vec<u8>,
    /// 1-based index of the first execution that hit this crash.
    pub first_exec: u64,
    pub generation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    MaxGenerations,
    FirstCrash,
    Hook,
    Aborted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::MaxGenerations => "max_generations",
            StopReason::FirstCrash => "first_crash",
            StopReason::Hook => "hook",
            StopReason::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub generations: Vec<GenerationStats>,
    pub crash_catalog: BTreeMap<CrashKey, CrashRecord>,
    pub covered_blocks: BTreeSet<BlockRef>,
    pub first_crash_exec: Option<u64>,
    pub total_executions: u64,
    pub pool: Vec<Seed>,
    pub stop_reason: StopReason,
}

/// Campaign failure together with everything gathered before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("campaign aborted: {error}")]
pub struct CampaignAbort {
    pub error: CampaignError,
    pub partial: CampaignReport,
}

/// Observers called from the campaign loop.
pub trait CampaignHooks {
    fn on_execution(&mut self, _exec_index: u64, _input: &[u8], _result: &ExecutionResult) {}

    /// Checked after every generation; `true` ends the campaign.
    fn should_stop(&mut self, _stats: &GenerationStats) -> bool {
        false
    }
}

pub struct NoHooks;

impl CampaignHooks for NoHooks {}

struct State {
    report: CampaignReport,
    pool: SeedPool,
}

impl State {
    fn into_report(self, reason: StopReason) -> CampaignReport {
        let mut report = self.report;
        report.pool = self.pool.into_seeds();
        report.stop_reason = reason;
        report
    }
}

/// Runs a generational campaign against `adapter`.
///
/// `svs` is required in [`FitnessMode::SvsSum`] and must score every block
/// of the target. The run depends only on its arguments.
pub fn run_campaign<A: TargetAdapter + ?Sized>(
    adapter: &A,
    svs: Option<&SvsMap>,
    initial: &[Vec<u8>],
    config: &CampaignConfig,
    hooks: &mut dyn CampaignHooks,
) -> Result<CampaignReport, CampaignAbort> {
    let empty = CampaignReport {
        generations: Vec::new(),
        crash_catalog: BTreeMap::new(),
        covered_blocks: BTreeSet::new(),
        first_crash_exec: None,
        total_executions: 0,
        pool: Vec::new(),
        stop_reason: StopReason::Aborted,
    };
    let abort = |error: CampaignError, partial: CampaignReport| CampaignAbort { error, partial };
    if let Err(e) = config.check() {
        return Err(abort(e, empty));
    }
    if initial.is_empty() {
        return Err(abort(CampaignError::NoInitialInputs, empty));
    }
    let resolved = match (config.fitness_mode, svs) {
        (FitnessMode::SvsSum, None) => return Err(abort(CampaignError::MissingSvs, empty)),
        (FitnessMode::SvsSum, Some(m)) => {
            match m.resolve(&adapter.function_names(), &adapter.block_universe()) {
                Ok(r) => Some(r),
                Err(e) => return Err(abort(e.into(), empty)),
            }
        }
        (FitnessMode::CoverageCount, _) => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut cwj = CwjState::new(config.ini_cw, config.min_cw, config.max_cw).expect("checked");
    let mut st = State { report: empty, pool: SeedPool::new(config.capacity()) };
    let mut testcases: Vec<Vec<u8>> = initial.to_vec();
    let mut generation = 0usize;

    loop {
        let results = match adapter.execute_batch(&testcases, config.step_limit) {
            Ok(r) => r,
            Err(e) => return Err(abort(e.into(), st.into_report(StopReason::Aborted))),
        };
        let origin = if generation == 0 { Origin::Initial } else { Origin::Mutated };
        let mut seeds = Vec::with_capacity(results.len());
        let mut new_blocks = 0usize;
        let mut new_crash = false;
        let mut best = 0.0f64;
        for (input, result) in testcases.drain(..).zip(&results) {
            let r = &mut st.report;
            r.total_executions += 1;
            let exec = r.total_executions;
            hooks.on_execution(exec, &input, result);
            let fresh = result.path.iter().filter(|b| r.covered_blocks.insert(**b)).count();
            new_blocks += fresh;
            let fitness = match &resolved {
                Some(table) => match table.fitness(&result.path, config.fitness_count) {
                    Ok(f) => f,
                    Err(b) => {
                        return Err(abort(CampaignError::Unscored(b), st.into_report(StopReason::Aborted)));
                    }
                },
                None => fresh as f64,
            };
            best = best.max(fitness);
            let crash = CrashKey::of(result);
            if let Some(key) = crash {
                r.first_crash_exec.get_or_insert(exec);
                if !r.crash_catalog.contains_key(&key) {
                    r.crash_catalog.insert(key, CrashRecord { input: input.clone(), first_exec: exec, generation });
                    new_crash = true;
                }
            }
            let origin = if crash.is_some() { Origin::Crash } else { origin };
            seeds.push(Seed { bytes: input, fitness, crash, origin, discovered_at: generation });
        }

        cwj = cwj_step(&cwj, new_crash, new_blocks > 0, config.cwj_text_mode);
        for s in select_seeds(&seeds, config.top_k).expect("generation is non-empty and K >= 1") {
            st.pool.insert(s);
        }
        let stats = GenerationStats {
            generation,
            executions: st.report.total_executions,
            new_blocks,
            unique_crashes: st.report.crash_catalog.len(),
            covered_blocks: st.report.covered_blocks.len(),
            cw: cwj.cw,
            ms: cwj.ms,
            zeta: cwj.zeta,
            best_fitness: best,
        };
        st.report.generations.push(stats.clone());

        let reason = if config.stop_on_first_crash && st.report.first_crash_exec.is_some() {
            Some(StopReason::FirstCrash)
        } else if config.max_generations.is_some_and(|m| generation + 1 >= m) {
            Some(StopReason::MaxGenerations)
        } else if st.report.total_executions + config.population as u64 > config.max_execs {
            Some(StopReason::Budget)
        } else if hooks.should_stop(&stats) {
            Some(StopReason::Hook)
        } else {
            None
        };
        if let Some(reason) = reason {
            return Ok(st.into_report(reason));
        }

        let pool: Vec<&[u8]> = st.pool.seeds().iter().map(|s| s.bytes.as_slice()).collect();
        for _ in 0..config.population {
            let parent = pool[rng.gen_range(0..pool.len())];
            testcases.push(match cwj.ms {
                MutationStrategy::Slight => mutate_slight(parent, &mut rng),
                MutationStrategy::Heavy => mutate_heavy(parent, &pool, &mut rng),
            });
        }
        generation += 1;
    }
}
