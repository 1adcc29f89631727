//! Random target programs with planted, guarded bugs.
//!
//! `main` runs through a chain of gates; gate `i` is a one-byte comparison
//! that, when it holds, calls `fn_i`. Each `fn_i` is a random acyclic CFG
//! with fault-free filler. Every input position is used by at most one
//! comparison, so the path to any block can be forced by writing the bytes
//! of its branches, which is how trigger inputs are built.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::program::{ArithOp, Block, CrashKind, Instruction, Operand, Program, Reg, Terminator};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedBug {
    /// Index into the generated `fn_*` functions.
    pub function: usize,
    pub kind: CrashKind,
    /// Number of input bytes the guard compares.
    pub guard_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugPlan {
    /// Number of functions besides `main`.
    pub functions: usize,
    /// Functions that may hold bugs; they also get allocation-heavy filler.
    pub vulnerable: Vec<usize>,
    pub bugs: Vec<PlannedBug>,
    pub input_len: usize,
    /// Inclusive range of blocks per function.
    pub blocks: (usize, usize),
}

impl Default for BugPlan {
    fn default() -> Self {
        Self { functions: 4, vulnerable: Vec::new(), bugs: Vec::new(), input_len: 32, blocks: (3, 8) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthBug {
    pub id: u32,
    pub function: String,
    pub kind: CrashKind,
    /// Block holding the bug.
    pub block: u32,
    pub guard: Vec<(u32, u8)>,
    /// An input that fires this bug.
    pub trigger_input: Vec<u8>,
}

impl GroundTruthBug {
    /// The trigger input with every guard byte altered: it reaches the bug
    /// block but does not fire the bug.
    pub fn near_miss(&self) -> Vec<u8> {
        let mut input = self.trigger_input.clone();
        for &(p, v) in &self.guard {
            input[p as usize] = v ^ 0x01;
        }
        input
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("plan needs at least one function and a block range 1 <= min <= max")]
    Shape,
    #[error("vulnerable function index {0} out of range")]
    VulnerableIndex(usize),
    #[error("bug {0} is in function {1}, which is not marked vulnerable")]
    NotVulnerable(usize, usize),
    #[error("bug {0} has guard depth 0; its guard would always hold")]
    EmptyGuard(usize),
    #[error("plan needs {needed} distinct input positions but input_len is {available}")]
    TooFewPositions { needed: usize, available: usize },
}

fn fn_name(i: usize) -> String {
    format!("fn_{i}")
}

fn nonzero(rng: &mut ChaCha8Rng) -> u8 {
    rng.gen_range(1..=255)
}

fn filler(rng: &mut ChaCha8Rng, input_len: usize, heap_heavy: bool) -> Vec<Instruction> {
    let pos = |rng: &mut ChaCha8Rng| rng.gen_range(0..input_len as u32);
    let mut out = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let r = Reg(rng.gen_range(0..4));
        let insn = match rng.gen_range(0..6) {
            0 => Instruction::Nop,
            1 => Instruction::Load { dst: r, src: Operand::Input(pos(rng)) },
            2 => Instruction::CmpByte { pos: pos(rng), value: rng.gen() },
            3 => Instruction::Arith {
                op: [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][rng.gen_range(0..3)],
                dst: r,
                src: Operand::Imm(rng.gen_range(-16..=16)),
            },
            4 => Instruction::Arith {
                op: if rng.gen() { ArithOp::Div } else { ArithOp::Mod },
                dst: r,
                src: Operand::Imm(rng.gen_range(1..=9)),
            },
            _ => Instruction::Arith { op: ArithOp::Add, dst: r, src: Operand::Input(pos(rng)) },
        };
        out.push(insn);
    }
    let heap_ops = if heap_heavy { rng.gen_range(1..=2) } else { usize::from(rng.gen_bool(0.15)) };
    for _ in 0..heap_ops {
        // Self-contained: the chunk is written, read back and released in place.
        let size = rng.gen_range(1..=16);
        let off = rng.gen_range(0..size);
        let p = Reg(5);
        out.push(if rng.gen() {
            Instruction::Alloc { dst: p, size: Operand::Imm(size) }
        } else {
            Instruction::Calloc { dst: p, size: Operand::Imm(size) }
        });
        out.push(Instruction::Store { dst: Operand::Displ { base: p, disp: off }, src: Reg(0) });
        out.push(Instruction::Load { dst: Reg(1), src: Operand::Displ { base: p, disp: off } });
        out.push(Instruction::Free { ptr: p });
    }
    out
}

/// Generates a program following `plan` and the ground truth for its bugs.
/// Bug ids are 1, 2, ... in plan order.
pub fn gen_target(plan: &BugPlan, rng_seed: u64) -> Result<(Program, Vec<GroundTruthBug>), GenError> {
    let (lo, hi) = plan.blocks;
    if plan.functions == 0 || lo == 0 || lo > hi {
        return Err(GenError::Shape);
    }
    if let Some(&v) = plan.vulnerable.iter().find(|&&v| v >= plan.functions) {
        return Err(GenError::VulnerableIndex(v));
    }
    for (i, b) in plan.bugs.iter().enumerate() {
        if !plan.vulnerable.contains(&b.function) {
            return Err(GenError::NotVulnerable(i, b.function));
        }
        if b.guard_depth == 0 {
            return Err(GenError::EmptyGuard(i));
        }
    }
    let needed = plan.functions + plan.bugs.iter().map(|b| b.guard_depth).sum::<usize>();
    if needed > plan.input_len {
        return Err(GenError::TooFewPositions { needed, available: plan.input_len });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut free_positions: Vec<u32> = (0..plan.input_len as u32).collect();
    free_positions.shuffle(&mut rng);
    let mut reserved = free_positions.split_off(free_positions.len() - needed);

    // main: gate i at block 2i calls fn_i from block 2i+1.
    let mut gates = Vec::with_capacity(plan.functions);
    let mut main = Vec::with_capacity(2 * plan.functions + 1);
    for i in 0..plan.functions {
        let (pos, value) = (reserved.pop().expect("reserved"), nonzero(&mut rng));
        gates.push((pos, value));
        let (b, call, next) = (2 * i as u32, 2 * i as u32 + 1, 2 * i as u32 + 2);
        main.push(Block::new(b, Vec::new(), Terminator::Jif { pos, value, then: call, otherwise: next }));
        main.push(Block::new(call, vec![Instruction::Call(fn_name(i))], Terminator::Jmp(next)));
    }
    main.push(Block::new(2 * plan.functions as u32, Vec::new(), Terminator::Halt));

    let mut bodies: Vec<Vec<Block>> = Vec::with_capacity(plan.functions);
    for f in 0..plan.functions {
        let heavy = plan.vulnerable.contains(&f);
        let n = rng.gen_range(lo..=hi);
        let call_site = (f + 1 < plan.functions && rng.gen_bool(0.5))
            .then(|| (rng.gen_range(0..n), rng.gen_range(f + 1..plan.functions)));
        let mut blocks = Vec::with_capacity(n);
        for j in 0..n {
            let mut insns = filler(&mut rng, plan.input_len, heavy);
            if let Some((site, callee)) = call_site {
                if site == j {
                    insns.push(Instruction::Call(fn_name(callee)));
                }
            }
            let id = j as u32;
            let term = if j + 1 == n {
                Terminator::Ret
            } else if j + 2 < n && rng.gen_bool(0.6) && !free_positions.is_empty() {
                let skip = rng.gen_range(j + 2..n) as u32;
                let pos = free_positions.pop().expect("non-empty");
                let value = nonzero(&mut rng);
                if rng.gen() {
                    Terminator::Jif { pos, value, then: skip, otherwise: id + 1 }
                } else {
                    Terminator::Jif { pos, value, then: id + 1, otherwise: skip }
                }
            } else {
                Terminator::Jmp(id + 1)
            };
            blocks.push(Block::new(id, insns, term));
        }
        bodies.push(blocks);
    }

    let mut truth = Vec::with_capacity(plan.bugs.len());
    for (i, bug) in plan.bugs.iter().enumerate() {
        let id = i as u32 + 1;
        let blocks = &mut bodies[bug.function];
        let target = rng.gen_range(0..blocks.len());
        let guard: Vec<(u32, u8)> =
            (0..bug.guard_depth).map(|_| (reserved.pop().expect("reserved"), nonzero(&mut rng))).collect();
        blocks[target].insns.push(Instruction::BugIf { id, kind: bug.kind, guard: guard.clone() });

        let mut input = vec![0u8; plan.input_len];
        let (gpos, gval) = gates[bug.function];
        input[gpos as usize] = gval;
        force_path(blocks, target, &mut input);
        for &(p, v) in &guard {
            input[p as usize] = v;
        }
        truth.push(GroundTruthBug {
            id,
            function: fn_name(bug.function),
            kind: bug.kind,
            block: target as u32,
            guard,
            trigger_input: input,
        });
    }

    let mut functions = vec![(String::from("main"), main)];
    functions.extend(bodies.into_iter().enumerate().map(|(i, b)| (fn_name(i), b)));
    let program = Program::new(format!("target_{rng_seed}"), functions).expect("generator emits valid programs");
    Ok((program, truth))
}

/// Writes the branch bytes that steer execution from block 0 to `target`.
/// Blocks are indexed by id and only jump forward.
fn force_path(blocks: &[Block], target: usize, input: &mut [u8]) {
    // Any predecessor on some path from the entry works, because branch
    // positions are never shared.
    let mut pred: BTreeMap<usize, usize> = BTreeMap::new();
    for (j, b) in blocks.iter().enumerate() {
        if j != 0 && !pred.contains_key(&j) {
            continue;
        }
        for s in b.term.successors() {
            pred.entry(s as usize).or_insert(j);
        }
    }
    let mut cur = target;
    while cur != 0 {
        let p = pred[&cur];
        if let Terminator::Jif { pos, value, then, otherwise } = blocks[p].term {
            if then as usize == cur {
                input[pos as usize] = value;
            } else {
                debug_assert_eq!(otherwise as usize, cur);
                // Values are nonzero, so the zero default already misses.
                input[pos as usize] = 0;
            }
        }
        cur = p;
    }
}
