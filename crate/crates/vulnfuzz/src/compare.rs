//! Paired comparison of two sets of campaign trials.

use serde::Serialize;

use crate::formats::ReportDoc;

/// Outcome of one campaign, as needed for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub seed: u64,
    pub first_crash_exec: Option<u64>,
    pub unique_crashes: usize,
    pub covered_blocks: usize,
    /// Used in place of `first_crash_exec` when no crash was found.
    pub budget: u64,
}

impl From<&ReportDoc> for Trial {
    fn from(r: &ReportDoc) -> Self {
        Self {
            seed: r.meta.rng_seed,
            first_crash_exec: r.first_crash_exec,
            unique_crashes: r.unique_crashes,
            covered_blocks: r.covered_block_count,
            budget: r.meta.budget_execs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Linear-interpolation quantile of sorted data (Hyndman and Fan type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn spread(values: impl IntoIterator<Item = f64>) -> Spread {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    Spread { median, q1, q3, iqr: q3 - q1 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub trials: usize,
    /// Trials that found at least one crash.
    pub found: usize,
    /// Executions to first crash; trials without a crash count as their budget.
    pub exec_to_first_crash: Spread,
    pub unique_crashes: Spread,
    pub covered_blocks: Spread,
}

impl ModeSummary {
    pub fn of(trials: &[Trial]) -> Self {
        Self {
            trials: trials.len(),
            found: trials.iter().filter(|t| t.first_crash_exec.is_some()).count(),
            exec_to_first_crash: spread(trials.iter().map(|t| t.first_crash_exec.unwrap_or(t.budget) as f64)),
            unique_crashes: spread(trials.iter().map(|t| t.unique_crashes as f64)),
            covered_blocks: spread(trials.iter().map(|t| t.covered_blocks as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    /// Median of A minus median of B.
    pub delta: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub a: ModeSummary,
    pub b: ModeSummary,
    /// Fewer executions wins.
    pub exec_to_first_crash: MetricComparison,
    /// More wins.
    pub unique_crashes: MetricComparison,
    /// More wins.
    pub covered_blocks: MetricComparison,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("each side needs at least one trial")]
    Empty,
    #[error("unpaired trials: {a} in A, {b} in B")]
    Count { a: usize, b: usize },
    #[error("unpaired trials: seed {0} appears on one side only")]
    Seed(u64),
}

fn metric(a: f64, b: f64, lower_is_better: bool) -> MetricComparison {
    let winner = if a == b {
        Winner::Tie
    } else if (a < b) == lower_is_better {
        Winner::A
    } else {
        Winner::B
    };
    MetricComparison { delta: a - b, winner }
}

/// Compares trial sets that must pair up one-to-one by seed.
pub fn compare(a: &[Trial], b: &[Trial]) -> Result<CompareSummary, CompareError> {
    if a.is_empty() || b.is_empty() {
        return Err(CompareError::Empty);
    }
    if a.len() != b.len() {
        return Err(CompareError::Count { a: a.len(), b: b.len() });
    }
    let mut sa: Vec<u64> = a.iter().map(|t| t.seed).collect();
    let mut sb: Vec<u64> = b.iter().map(|t| t.seed).collect();
    sa.sort_unstable();
    sb.sort_unstable();
    if let Some((x, y)) = sa.iter().zip(&sb).find(|(x, y)| x != y) {
        return Err(CompareError::Seed(*x.min(y)));
    }
    let (ma, mb) = (ModeSummary::of(a), ModeSummary::of(b));
    Ok(CompareSummary {
        exec_to_first_crash: metric(ma.exec_to_first_crash.median, mb.exec_to_first_crash.median, true),
        unique_crashes: metric(ma.unique_crashes.median, mb.unique_crashes.median, false),
        covered_blocks: metric(ma.covered_blocks.median, mb.covered_blocks.median, false),
        a: ma,
        b: mb,
    })
}
