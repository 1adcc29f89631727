use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use vulnfuzz_core::fuzz::CampaignReport;

use super::{to_json_pretty, FormatError};

/// Campaign settings recorded next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMeta {
    pub target: String,
    pub fitness_mode: String,
    pub rng_seed: u64,
    pub budget_execs: u64,
    pub population: usize,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationDoc {
    pub generation: usize,
    pub executions: u64,
    pub new_blocks: usize,
    pub unique_crashes: usize,
    pub covered_blocks: usize,
    #[serde(rename = "CW")]
    pub cw: u32,
    #[serde(rename = "MS")]
    pub ms: String,
    pub zeta: u32,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrashDoc {
    pub kind: String,
    pub function: String,
    pub block: u32,
    pub bug_id: Option<u32>,
    pub input_hex: String,
    pub first_exec: u64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolDoc {
    pub input_hex: String,
    pub fitness: f64,
    pub crash: bool,
    pub origin: String,
    pub discovered_at: usize,
}

/// The JSON campaign report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub meta: ReportMeta,
    pub crashes_found: bool,
    pub total_executions: u64,
    pub first_crash_exec: Option<u64>,
    pub unique_crashes: usize,
    pub covered_block_count: usize,
    pub stop_reason: String,
    pub generations: Vec<GenerationDoc>,
    pub crash_catalog: Vec<CrashDoc>,
    pub covered_blocks: Vec<(String, u32)>,
    pub pool: Vec<PoolDoc>,
}

fn name(names: &[String], func: u32) -> String {
    names.get(func as usize).cloned().unwrap_or_else(|| format!("#{func}"))
}

impl ReportDoc {
    /// `names[i]` is the name of function `i` of the target.
    pub fn new(report: &CampaignReport, meta: ReportMeta, names: &[String]) -> Self {
        Self {
            meta,
            crashes_found: !report.crash_catalog.is_empty(),
            total_executions: report.total_executions,
            first_crash_exec: report.first_crash_exec,
            unique_crashes: report.crash_catalog.len(),
            covered_block_count: report.covered_blocks.len(),
            stop_reason: report.stop_reason.as_str().to_string(),
            generations: report
                .generations
                .iter()
                .map(|g| GenerationDoc {
                    generation: g.generation,
                    executions: g.executions,
                    new_blocks: g.new_blocks,
                    unique_crashes: g.unique_crashes,
                    covered_blocks: g.covered_blocks,
                    cw: g.cw,
                    ms: g.ms.as_str().to_string(),
                    zeta: g.zeta,
                    best_fitness: g.best_fitness,
                })
                .collect(),
            crash_catalog: report
                .crash_catalog
                .iter()
                .map(|(k, r)| CrashDoc {
                    kind: k.kind.as_str().to_string(),
                    function: name(names, k.site.func),
                    block: k.site.block,
                    bug_id: k.bug_id,
                    input_hex: hex::encode(&r.input),
                    first_exec: r.first_exec,
                    generation: r.generation,
                })
                .collect(),
            covered_blocks: report.covered_blocks.iter().map(|b| (name(names, b.func), b.block)).collect(),
            pool: report
                .pool
                .iter()
                .map(|s| PoolDoc {
                    input_hex: hex::encode(&s.bytes),
                    fitness: s.fitness,
                    crash: s.is_crash(),
                    origin: s.origin.as_str().to_string(),
                    discovered_at: s.discovered_at,
                })
                .collect(),
        }
    }
}

pub fn report_to_json(report: &CampaignReport, meta: ReportMeta, names: &[String]) -> String {
    to_json_pretty(&ReportDoc::new(report, meta, names))
}

pub fn report_from_json(text: &str) -> Result<ReportDoc, FormatError> {
    Ok(serde_json::from_str(text)?)
}

/// Per-generation time series for growth curves.
pub fn report_csv(report: &CampaignReport) -> String {
    let mut out = String::from("generation,executions,unique_crashes,covered_blocks,CW,MS\n");
    for g in &report.generations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            g.generation, g.executions, g.unique_crashes, g.covered_blocks, g.cw, g.ms
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use vulnfuzz_core::fuzz::{run_campaign, CampaignConfig, FitnessMode, NoHooks};
    use vulnfuzz_core::vm::{assemble, VmTarget};

    fn campaign() -> CampaignReport {
        let t = VmTarget::new(
            assemble("fn main\nblock 0:\n  jif 0 'x' 1 2\nblock 1:\n  bug 1 assert 1='y'\n  halt\nblock 2:\n  halt\n")
                .unwrap(),
        );
        let cfg = CampaignConfig {
            fitness_mode: FitnessMode::CoverageCount,
            max_execs: 500,
            ..CampaignConfig::default()
        };
        run_campaign(&t, None, &[b"xy".to_vec(), b"ab".to_vec()], &cfg, &mut NoHooks).unwrap()
    }

    fn meta() -> ReportMeta {
        ReportMeta {
            target: "t".to_string(),
            fitness_mode: "coverage_count".to_string(),
            rng_seed: 0,
            budget_execs: 500,
            population: 50,
            top_k: 10,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = campaign();
        let text = report_to_json(&r, meta(), &["main".to_string()]);
        let doc = report_from_json(&text).unwrap();
        assert_eq!(doc, ReportDoc::new(&r, meta(), &["main".to_string()]));
        assert!(doc.crashes_found);
        assert_eq!(doc.first_crash_exec, Some(1));
        assert_eq!(doc.crash_catalog[0].input_hex, "7879");
        assert_eq!(doc.crash_catalog[0].bug_id, Some(1));
    }

    #[test]
    fn csv_columns() {
        let r = campaign();
        let csv = report_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("generation,executions,unique_crashes,covered_blocks,CW,MS"));
        assert_eq!(lines.next().unwrap().split(',').collect::<Vec<_>>()[..4], ["0", "2", "1", "3"]);
        assert_eq!(csv.lines().count(), r.generations.len() + 1);
    }
}
