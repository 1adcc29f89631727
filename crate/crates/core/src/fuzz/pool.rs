use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::vm::{BlockRef, CrashKind, ExecutionResult, Outcome};

/// Unique-crash identity: kind, site and planted bug id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrashKey {
    pub kind: CrashKind,
    pub site: BlockRef,
    pub bug_id: Option<u32>,
}

impl CrashKey {
    pub fn of(result: &ExecutionResult) -> Option<Self> {
        match result.outcome {
            Outcome::Crash { kind, site, bug_id } => Some(Self { kind, site, bug_id }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Initial,
    Mutated,
    Crash,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Initial => "initial",
            Origin::Mutated => "mutated",
            Origin::Crash => "crash",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub bytes: Vec<u8>,
    pub fitness: f64,
    pub crash: Option<CrashKey>,
    pub origin: Origin,
    pub discovered_at: usize,
}

impl Seed {
    pub fn is_crash(&self) -> bool {
        self.crash.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("cannot select from an empty generation")]
    EmptyGeneration,
    #[error("K must be at least 1")]
    ZeroK,
}

/// Every crashing input plus the `k` fittest non-crashing ones.
///
/// Ties keep execution order, and the result is in execution order.
pub fn select_seeds(generation: &[Seed], k: usize) -> Result<Vec<Seed>, SelectError> {
    if generation.is_empty() {
        return Err(SelectError::EmptyGeneration);
    }
    if k == 0 {
        return Err(SelectError::ZeroK);
    }
    let mut ranked: Vec<usize> = (0..generation.len()).filter(|&i| !generation[i].is_crash()).collect();
    ranked.sort_by(|&a, &b| generation[b].fitness.total_cmp(&generation[a].fitness));
    let mut keep: BTreeSet<usize> = ranked.into_iter().take(k).collect();
    keep.extend((0..generation.len()).filter(|&i| generation[i].is_crash()));
    Ok(keep.into_iter().map(|i| generation[i].clone()).collect())
}

/// Retained seeds.
///
/// When full, the lowest-fitness non-crash seed is evicted, oldest first on
/// ties. Crash seeds are never evicted; one is kept per crash key, even if
/// that takes the pool past `capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPool {
    seeds: Vec<Seed>,
    capacity: usize,
    crash_keys: BTreeSet<CrashKey>,
}

impl SeedPool {
    pub fn new(capacity: usize) -> Self {
        Self { seeds: Vec::new(), capacity: capacity.max(1), crash_keys: BTreeSet::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn into_seeds(self) -> Vec<Seed> {
        self.seeds
    }

    /// Returns whether `seed` was admitted.
    pub fn insert(&mut self, seed: Seed) -> bool {
        if self.seeds.iter().any(|s| s.bytes == seed.bytes) {
            return false;
        }
        if let Some(key) = seed.crash {
            if !self.crash_keys.insert(key) {
                return false;
            }
            if self.seeds.len() >= self.capacity {
                if let Some(i) = self.weakest() {
                    self.seeds.remove(i);
                }
            }
            self.seeds.push(seed);
            return true;
        }
        if self.seeds.len() >= self.capacity {
            match self.weakest() {
                Some(i) if self.seeds[i].fitness < seed.fitness => {
                    self.seeds.remove(i);
                }
                _ => return false,
            }
        }
        self.seeds.push(seed);
        true
    }

    /// Lowest-fitness non-crash seed, oldest on ties.
    fn weakest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.seeds.iter().enumerate() {
            if s.is_crash() {
                continue;
            }
            match best {
                Some(b) if self.seeds[b].fitness <= s.fitness => {}
                _ => best = Some(i),
            }
        }
        best
    }
}
