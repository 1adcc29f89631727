//! Static vulnerable scores and path fitness.
//!
//! Every block of a function with vulnerable probability `p` scores
//! `kappa * p + omega`. The fitness of an execution is the sum of the scores
//! of the blocks on its path, counting a block again each time it is visited.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::vm::BlockRef;

pub const DEFAULT_KAPPA: f64 = 20.0;
pub const DEFAULT_OMEGA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("kappa must be finite and >= 0, omega finite and > 0 (got {kappa}, {omega})")]
    Constants { kappa: f64, omega: f64 },
    #[error("probability {p} for `{function}` outside [0, 1]")]
    Probability { function: String, p: f64 },
    #[error("function `{0}` has blocks but no prediction")]
    MissingPrediction(String),
    #[error("no score for block {block} of `{function}`")]
    UnknownBlock { function: String, block: u32 },
    #[error("duplicate entry for `{0}`")]
    Duplicate(String),
    #[error("score {svs} for block {block} of `{function}` must be finite and > 0")]
    Score { function: String, block: u32, svs: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionScores {
    pub name: String,
    pub p: f64,
    /// `(block id, score)`, sorted by id.
    pub blocks: Vec<(u32, f64)>,
}

/// Per-block static vulnerable scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SvsMap {
    pub kappa: f64,
    pub omega: f64,
    functions: Vec<FunctionScores>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessCount {
    /// Every visit to a block adds its score.
    #[default]
    PerVisit,
    /// Each distinct block adds its score once.
    UniqueBlocks,
}

fn check_constants(kappa: f64, omega: f64) -> Result<(), ScoreError> {
    if kappa.is_finite() && kappa >= 0.0 && omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(ScoreError::Constants { kappa, omega })
    }
}

/// Assigns `kappa * p + omega` to every block of every function.
///
/// `program_blocks` lists each function with its block ids; every function
/// with at least one block needs an entry in `predictions`.
pub fn assign_svs(
    predictions: &BTreeMap<String, f64>,
    program_blocks: &[(String, Vec<u32>)],
    kappa: f64,
    omega: f64,
) -> Result<SvsMap, ScoreError> {
    check_constants(kappa, omega)?;
    let mut seen = BTreeSet::new();
    let mut functions = Vec::with_capacity(program_blocks.len());
    for (name, blocks) in program_blocks {
        if !seen.insert(name.as_str()) {
            return Err(ScoreError::Duplicate(name.clone()));
        }
        let p = match predictions.get(name) {
            Some(&p) => p,
            None if blocks.is_empty() => continue,
            None => return Err(ScoreError::MissingPrediction(name.clone())),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(ScoreError::Probability { function: name.clone(), p });
        }
        let score = kappa * p + omega;
        let mut ids = blocks.clone();
        ids.sort_unstable();
        ids.dedup();
        functions.push(FunctionScores {
            name: name.clone(),
            p,
            blocks: ids.into_iter().map(|b| (b, score)).collect(),
        });
    }
    Ok(SvsMap { kappa, omega, functions })
}

impl SvsMap {
    /// Builds a map from explicit per-block scores, e.g. a replayed dump.
    pub fn from_scores(
        kappa: f64,
        omega: f64,
        functions: Vec<FunctionScores>,
    ) -> Result<Self, ScoreError> {
        check_constants(kappa, omega)?;
        let mut names = BTreeSet::new();
        let mut out = Vec::with_capacity(functions.len());
        for mut f in functions {
            if !names.insert(f.name.clone()) {
                return Err(ScoreError::Duplicate(f.name));
            }
            if !(0.0..=1.0).contains(&f.p) {
                return Err(ScoreError::Probability { function: f.name, p: f.p });
            }
            if let Some(&(block, svs)) = f.blocks.iter().find(|(_, s)| !(s.is_finite() && *s > 0.0)) {
                return Err(ScoreError::Score { function: f.name, block, svs });
            }
            f.blocks.sort_by_key(|b| b.0);
            if f.blocks.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(ScoreError::Duplicate(f.name));
            }
            out.push(f);
        }
        Ok(Self { kappa, omega, functions: out })
    }

    pub fn functions(&self) -> &[FunctionScores] {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&FunctionScores> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn score(&self, function: &str, block: u32) -> Option<f64> {
        let f = self.function(function)?;
        f.blocks.binary_search_by_key(&block, |b| b.0).ok().map(|i| f.blocks[i].1)
    }

    /// Sum of scores along `path`.
    pub fn fitness<'a>(
        &self,
        path: impl IntoIterator<Item = (&'a str, u32)>,
        count: FitnessCount,
    ) -> Result<f64, ScoreError> {
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for (function, block) in path {
            let s = self.score(function, block).ok_or_else(|| ScoreError::UnknownBlock {
                function: String::from(function),
                block,
            })?;
            if count == FitnessCount::PerVisit || seen.insert((function, block)) {
                total += s;
            }
        }
        Ok(total)
    }

    /// Index-based lookup table for a target whose functions are `names`,
    /// checking that every block in `universe` has a score.
    pub fn resolve(&self, names: &[String], universe: &[BlockRef]) -> Result<ResolvedSvs, ScoreError> {
        let mut table = alloc::vec![BTreeMap::new(); names.len()];
        for (i, name) in names.iter().enumerate() {
            if let Some(f) = self.function(name) {
                table[i] = f.blocks.iter().copied().collect();
            }
        }
        for b in universe {
            let known = table.get(b.func as usize).is_some_and(|t| t.contains_key(&b.block));
            if !known {
                let function = names.get(b.func as usize).cloned().unwrap_or_default();
                return Err(ScoreError::UnknownBlock { function, block: b.block });
            }
        }
        Ok(ResolvedSvs { table })
    }
}

/// [`SvsMap`] keyed by function index, for scoring execution paths.
#[derive(Debug, Clone)]
pub struct ResolvedSvs {
    table: Vec<BTreeMap<u32, f64>>,
}

impl ResolvedSvs {
    pub fn score(&self, b: BlockRef) -> Option<f64> {
        self.table.get(b.func as usize)?.get(&b.block).copied()
    }

    pub fn fitness(&self, path: &[BlockRef], count: FitnessCount) -> Result<f64, BlockRef> {
        let mut total = 0.0;
        match count {
            FitnessCount::PerVisit => {
                for &b in path {
                    total += self.score(b).ok_or(b)?;
                }
            }
            FitnessCount::UniqueBlocks => {
                let unique: BTreeSet<BlockRef> = path.iter().copied().collect();
                for b in unique {
                    total += self.score(b).ok_or(b)?;
                }
            }
        }
        Ok(total)
    }
}
