//! Synthetic labeled ACFG corpora.
//!
//! Graphs of both classes share one baseline distribution. A vulnerable graph
//! is, with probability `signal_strength`, additionally given a memory-API hot
//! block: extra call, malloc, calloc, free and immediate-operand counts. At
//! strength 0 the classes are identically distributed; at 1 every vulnerable
//! graph carries the hot block.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acfg::{slot, Acfg, BasicBlockNode, DEFAULT_DIM};

/// Label convention: 0 means the function has at least one vulnerability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Vulnerable = 0,
    Secure = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u64) -> Option<Label> {
        match i {
            0 => Some(Label::Vulnerable),
            1 => Some(Label::Secure),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    pub graph: Acfg,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub per_class: usize,
    /// Inclusive block-count range.
    pub blocks: (usize, usize),
    /// Extra edges per block, inclusive range.
    pub edge_density: (f64, f64),
    pub signal_strength: f64,
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            per_class: 1000,
            blocks: (3, 12),
            edge_density: (0.0, 0.5),
            signal_strength: 1.0,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("block-count range {0}..={1} is empty or starts at zero")]
    BlockRange(usize, usize),
    #[error("edge-density range {0}..={1} is empty or negative")]
    DensityRange(f64, f64),
    #[error("signal strength {0} outside [0, 1]")]
    Signal(f64),
    #[error("train fraction {0} outside (0, 1)")]
    Fraction(f64),
    #[error("corpus too small to stratify: {0}")]
    TooSmall(alloc::string::String),
}

impl SynthSpec {
    pub fn check(&self) -> Result<(), SynthError> {
        let (lo, hi) = self.blocks;
        if lo == 0 || lo > hi {
            return Err(SynthError::BlockRange(lo, hi));
        }
        let (dlo, dhi) = self.edge_density;
        if !(dlo >= 0.0 && dlo <= dhi && dhi.is_finite()) {
            return Err(SynthError::DensityRange(dlo, dhi));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(SynthError::Signal(self.signal_strength));
        }
        Ok(())
    }
}

/// Instruction slots the baseline distribution draws from.
const COMMON_INSN: core::ops::RangeInclusive<usize> = 1..=24;

fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generates `2 * per_class` graphs, alternating vulnerable and secure.
pub fn generate(spec: &SynthSpec) -> Result<Vec<LabeledGraph>, SynthError> {
    spec.check()?;
    let total = spec.per_class * 2;
    Ok((0..total)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Vulnerable } else { Label::Secure };
            let mut rng = item_rng(spec.rng_seed, i as u64);
            let graph = generate_graph(spec, label, i, &mut rng);
            LabeledGraph { graph, label }
        })
        .collect())
}

fn generate_graph(spec: &SynthSpec, label: Label, index: usize, rng: &mut ChaCha8Rng) -> Acfg {
    let n = rng.gen_range(spec.blocks.0..=spec.blocks.1);
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for v in 1..n as u32 {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push((u, v));
    }
    let density = rng.gen_range(spec.edge_density.0..=spec.edge_density.1);
    let extra = libm::round(density * n as f64) as usize;
    for _ in 0..extra * 4 {
        if edges.len() >= n - 1 + extra {
            break;
        }
        let u = rng.gen_range(0..n as u32);
        let v = rng.gen_range(0..n as u32);
        if seen.insert((u, v)) {
            edges.push((u, v));
        }
    }

    let mut blocks: Vec<BasicBlockNode> = (0..n as u32)
        .map(|id| BasicBlockNode::new(id, baseline_attrs(rng)))
        .collect();

    let signal = rng.gen_bool(spec.signal_strength);
    if label == Label::Vulnerable && signal {
        let hot = rng.gen_range(0..n);
        let attrs = &mut blocks[hot].attrs;
        attrs[slot::STR_MALLOC] += rng.gen_range(3..=5) as f64;
        attrs[slot::STR_CALLOC] += rng.gen_range(1..=2) as f64;
        attrs[slot::STR_FREE] += rng.gen_range(1..=3) as f64;
        attrs[slot::CALL] += rng.gen_range(2..=4) as f64;
        attrs[slot::OP_IMM] += rng.gen_range(2..=5) as f64;
        for block in blocks.iter_mut() {
            if rng.gen_bool(0.3) {
                block.attrs[slot::CALL] += 1.0;
            }
        }
    }

    Acfg { function_name: format!("synth_{index:06}"), entry: 0, blocks, edges }
}

fn baseline_attrs(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut attrs = alloc::vec![0.0; DEFAULT_DIM];
    let kinds = rng.gen_range(2..=6);
    for _ in 0..kinds {
        let s = rng.gen_range(COMMON_INSN);
        attrs[s] += rng.gen_range(1..=4) as f64;
    }
    attrs[slot::OP_VOID] = rng.gen_range(0..=1) as f64;
    attrs[slot::OP_REG] = rng.gen_range(1..=6) as f64;
    attrs[slot::OP_MEM] = rng.gen_range(0..=2) as f64;
    attrs[slot::OP_PHRASE] = rng.gen_range(0..=1) as f64;
    attrs[slot::OP_DISPL] = rng.gen_range(0..=2) as f64;
    attrs[slot::OP_IMM] = rng.gen_range(0..=3) as f64;
    attrs[slot::OP_NEAR] = rng.gen_range(0..=1) as f64;
    if rng.gen_bool(0.3) {
        attrs[slot::CALL] += 1.0;
    }
    for s in [slot::STR_MALLOC, slot::STR_CALLOC, slot::STR_FREE] {
        if rng.gen_bool(0.04) {
            attrs[s] += 1.0;
        }
    }
    attrs
}

/// Class-stratified split. Both halves keep the corpus order.
pub fn split(
    corpus: &[LabeledGraph],
    train_fraction: f64,
    rng_seed: u64,
) -> Result<(Vec<LabeledGraph>, Vec<LabeledGraph>), SynthError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SynthError::Fraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut in_train = alloc::vec![false; corpus.len()];
    for label in [Label::Vulnerable, Label::Secure] {
        let mut idx: Vec<usize> =
            (0..corpus.len()).filter(|&i| corpus[i].label == label).collect();
        if idx.is_empty() {
            continue;
        }
        let k = libm::round(train_fraction * idx.len() as f64) as usize;
        if k == 0 || k == idx.len() {
            return Err(SynthError::TooSmall(format!(
                "{} {:?} graphs cannot be split at fraction {train_fraction}",
                idx.len(),
                label
            )));
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..k] {
            in_train[i] = true;
        }
    }
    if corpus.len() < 2 {
        return Err(SynthError::TooSmall(format!("{} graph(s)", corpus.len())));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (g, t) in corpus.iter().zip(in_train) {
        if t {
            train.push(g.clone());
        } else {
            test.push(g.clone());
        }
    }
    Ok((train, test))
}
