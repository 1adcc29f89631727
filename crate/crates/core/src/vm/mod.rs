//! Deterministic toy bytecode VM used as the fuzz target.
//!
//! Programs are functions of basic blocks. Every block entered is appended
//! to the execution path, including the caller's block again when a call
//! returns, so a crash site is always the last path entry.

mod asm;
mod exec;
mod extract;
mod gen;
mod program;

use alloc::string::String;
use alloc::vec::Vec;

pub use asm::{assemble, disassemble, AsmError};
pub use exec::execute;
pub use extract::{block_attributes, extract_acfg};
pub use gen::{gen_target, BugPlan, GenError, GroundTruthBug, PlannedBug};
pub use program::{
    ArithOp, Block, CrashKind, Function, Instruction, Operand, Program, ProgramError, Reg, Terminator,
    MAX_ALLOC, NUM_REGS,
};

use crate::acfg::ProgramAcfg;

/// Maximum call depth; deeper calls end the run with [`Outcome::LimitStop`].
pub const MAX_CALL_DEPTH: usize = 64;

/// A block addressed by function index and block id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockRef {
    pub func: u32,
    pub block: u32,
}

impl BlockRef {
    pub const fn new(func: u32, block: u32) -> Self {
        Self { func, block }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Exit,
    Crash { kind: CrashKind, site: BlockRef, bug_id: Option<u32> },
    LimitStop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub path: Vec<BlockRef>,
    pub outcome: Outcome,
    /// Blocks entered, equal to `path.len()`.
    pub steps: u64,
}

impl ExecutionResult {
    pub fn is_crash(&self) -> bool {
        matches!(self.outcome, Outcome::Crash { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TargetError {
    #[error("step limit must be positive")]
    StepLimit,
    #[error("target failure: {0}")]
    Failed(String),
}

/// What the fuzzer needs from a target.
///
/// `execute` must be a pure function of the target and the input.
pub trait TargetAdapter {
    fn function_names(&self) -> Vec<String>;

    fn execute(&self, input: &[u8], step_limit: u64) -> Result<ExecutionResult, TargetError>;

    /// Runs `inputs` and returns results in input order.
    fn execute_batch(&self, inputs: &[Vec<u8>], step_limit: u64) -> Result<Vec<ExecutionResult>, TargetError> {
        inputs.iter().map(|i| self.execute(i, step_limit)).collect()
    }

    fn block_universe(&self) -> Vec<BlockRef>;

    fn acfg(&self) -> ProgramAcfg;
}

/// [`TargetAdapter`] over an in-memory [`Program`].
#[derive(Debug, Clone)]
pub struct VmTarget {
    program: Program,
}

impl VmTarget {
    pub fn new(program: Program) -> Self {
        Self { program }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }
}

impl TargetAdapter for VmTarget {
    fn function_names(&self) -> Vec<String> {
        self.program.function_names()
    }

    fn execute(&self, input: &[u8], step_limit: u64) -> Result<ExecutionResult, TargetError> {
        if step_limit == 0 {
            return Err(TargetError::StepLimit);
        }
        Ok(execute(&self.program, input, step_limit))
    }

    fn block_universe(&self) -> Vec<BlockRef> {
        self.program.block_universe()
    }

    fn acfg(&self) -> ProgramAcfg {
        extract_acfg(&self.program)
    }
}
