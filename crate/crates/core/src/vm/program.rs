use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub const NUM_REGS: u8 = 8;
/// Upper bound on a single allocation, in bytes.
pub const MAX_ALLOC: i64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reg(pub u8);

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrashKind {
    OobWrite,
    OobRead,
    DoubleFree,
    DivZero,
    Assert,
}

impl CrashKind {
    pub const ALL: [CrashKind; 5] =
        [CrashKind::OobWrite, CrashKind::OobRead, CrashKind::DoubleFree, CrashKind::DivZero, CrashKind::Assert];

    pub fn as_str(self) -> &'static str {
        match self {
            CrashKind::OobWrite => "oob_write",
            CrashKind::OobRead => "oob_read",
            CrashKind::DoubleFree => "double_free",
            CrashKind::DivZero => "div_zero",
            CrashKind::Assert => "assert",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for CrashKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Instruction operand. Each variant corresponds to one operand-kind slot
/// of the attribute schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Reg(Reg),
    Imm(i64),
    /// Input byte at a fixed position (direct memory reference).
    Input(u32),
    /// Heap byte at `[base + index]`.
    Phrase { base: Reg, index: Reg },
    /// Heap byte at `[base + disp]`.
    Displ { base: Reg, disp: i64 },
}

impl Operand {
    fn is_value(&self) -> bool {
        matches!(self, Operand::Reg(_) | Operand::Imm(_) | Operand::Input(_))
    }

    fn is_heap(&self) -> bool {
        matches!(self, Operand::Phrase { .. } | Operand::Displ { .. })
    }

    fn regs(&self) -> impl Iterator<Item = Reg> {
        let (a, b) = match *self {
            Operand::Reg(r) => (Some(r), None),
            Operand::Phrase { base, index } => (Some(base), Some(index)),
            Operand::Displ { base, .. } => (Some(base), None),
            _ => (None, None),
        };
        a.into_iter().chain(b)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
            Operand::Input(p) => write!(f, "in[{p}]"),
            Operand::Phrase { base, index } => write!(f, "[{base}+{index}]"),
            Operand::Displ { base, disp } if *disp < 0 => write!(f, "[{base}-{}]", disp.unsigned_abs()),
            Operand::Displ { base, disp } => write!(f, "[{base}+{disp}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
            ArithOp::Mod => "mod",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Mod]
            .into_iter()
            .find(|o| o.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Nop,
    Call(String),
    /// Sets the compare flag to `input[pos] == value`.
    CmpByte { pos: u32, value: u8 },
    Alloc { dst: Reg, size: Operand },
    Calloc { dst: Reg, size: Operand },
    Free { ptr: Reg },
    Load { dst: Reg, src: Operand },
    Store { dst: Operand, src: Reg },
    Arith { op: ArithOp, dst: Reg, src: Operand },
    /// Planted bug: crashes with `kind` when every `(pos, value)` matches the input.
    BugIf { id: u32, kind: CrashKind, guard: Vec<(u32, u8)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    Jmp(u32),
    /// `input[pos] == value` jumps to `then`, anything else to `otherwise`.
    Jif { pos: u32, value: u8, then: u32, otherwise: u32 },
    Ret,
    Halt,
}

impl Terminator {
    pub fn successors(&self) -> impl Iterator<Item = u32> {
        let (a, b) = match *self {
            Terminator::Jmp(t) => (Some(t), None),
            Terminator::Jif { then, otherwise, .. } if then == otherwise => (Some(then), None),
            Terminator::Jif { then, otherwise, .. } => (Some(then), Some(otherwise)),
            Terminator::Ret | Terminator::Halt => (None, None),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: u32,
    pub insns: Vec<Instruction>,
    pub term: Terminator,
}

impl Block {
    pub fn new(id: u32, insns: Vec<Instruction>, term: Terminator) -> Self {
        Self { id, insns, term }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    /// The first block is the entry.
    pub blocks: Vec<Block>,
    index: BTreeMap<u32, usize>,
}

impl Function {
    pub fn block_index(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn entry(&self) -> &Block {
        &self.blocks[0]
    }
}

/// A validated program. The first function is the entry function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    functions: Vec<Function>,
    fn_index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ProgramError(pub String);

fn check_reg(r: Reg, at: &dyn Fn() -> String) -> Result<(), ProgramError> {
    if r.0 < NUM_REGS {
        Ok(())
    } else {
        Err(ProgramError(format!("{}: register {r} out of range (r0..r{})", at(), NUM_REGS - 1)))
    }
}

impl Program {
    pub fn new(name: impl Into<String>, functions: Vec<(String, Vec<Block>)>) -> Result<Self, ProgramError> {
        if functions.is_empty() {
            return Err(ProgramError(String::from("program has no functions")));
        }
        let mut fn_index = BTreeMap::new();
        for (i, (fname, _)) in functions.iter().enumerate() {
            if fn_index.insert(fname.clone(), i).is_some() {
                return Err(ProgramError(format!("duplicate function `{fname}`")));
            }
        }
        let mut bug_ids = BTreeSet::new();
        let mut out = Vec::with_capacity(functions.len());
        for (fname, blocks) in functions {
            if blocks.is_empty() {
                return Err(ProgramError(format!("function `{fname}` has no blocks")));
            }
            let mut index = BTreeMap::new();
            for (i, b) in blocks.iter().enumerate() {
                if index.insert(b.id, i).is_some() {
                    return Err(ProgramError(format!("duplicate block {} in `{fname}`", b.id)));
                }
            }
            for b in &blocks {
                let at = || format!("`{fname}` block {}", b.id);
                for insn in &b.insns {
                    match insn {
                        Instruction::Call(callee) if !fn_index.contains_key(callee) => {
                            return Err(ProgramError(format!("{}: call to undefined function `{callee}`", at())));
                        }
                        Instruction::Alloc { dst, size } | Instruction::Calloc { dst, size } => {
                            check_reg(*dst, &at)?;
                            if !size.is_value() {
                                return Err(ProgramError(format!("{}: allocation size must be a register, immediate or input byte", at())));
                            }
                            size.regs().try_for_each(|r| check_reg(r, &at))?;
                        }
                        Instruction::Free { ptr } => check_reg(*ptr, &at)?,
                        Instruction::Load { dst, src } => {
                            check_reg(*dst, &at)?;
                            src.regs().try_for_each(|r| check_reg(r, &at))?;
                        }
                        Instruction::Store { dst, src } => {
                            check_reg(*src, &at)?;
                            if !dst.is_heap() {
                                return Err(ProgramError(format!("{}: store destination must be a heap reference", at())));
                            }
                            dst.regs().try_for_each(|r| check_reg(r, &at))?;
                        }
                        Instruction::Arith { dst, src, .. } => {
                            check_reg(*dst, &at)?;
                            if !src.is_value() {
                                return Err(ProgramError(format!("{}: arithmetic source must be a register, immediate or input byte", at())));
                            }
                            src.regs().try_for_each(|r| check_reg(r, &at))?;
                        }
                        Instruction::BugIf { id, .. } if !bug_ids.insert(*id) => {
                            return Err(ProgramError(format!("{}: duplicate bug id {id}", at())));
                        }
                        _ => {}
                    }
                }
                for t in b.term.successors() {
                    if !index.contains_key(&t) {
                        return Err(ProgramError(format!("{}: jump to undefined block {t}", at())));
                    }
                }
            }
            out.push(Function { name: fname, blocks, index });
        }
        Ok(Self { name: name.into(), functions: out, fn_index })
    }

    pub fn functions(&self) -> &[Function] {
        &self.functions
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.fn_index.get(name).copied()
    }

    pub fn function_names(&self) -> Vec<String> {
        self.functions.iter().map(|f| f.name.clone()).collect()
    }

    /// Every `(function, block)` pair, in program order.
    pub fn block_universe(&self) -> Vec<super::BlockRef> {
        self.functions
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| f.blocks.iter().map(move |b| super::BlockRef::new(fi as u32, b.id)))
            .collect()
    }

    /// `(function, bug id)` for every planted bug.
    pub fn planted_bugs(&self) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for (fi, f) in self.functions.iter().enumerate() {
            for b in &f.blocks {
                for insn in &b.insns {
                    if let Instruction::BugIf { id, .. } = insn {
                        out.push((fi, *id));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn rejects_bad_programs() {
        assert!(Program::new("p", vec![]).is_err());
        let dangling = vec![("main".to_string(), vec![Block::new(0, vec![], Terminator::Jmp(3))])];
        assert!(Program::new("p", dangling).unwrap_err().0.contains("undefined block 3"));
        let bad_call = vec![(
            "main".to_string(),
            vec![Block::new(0, vec![Instruction::Call("nope".to_string())], Terminator::Halt)],
        )];
        assert!(Program::new("p", bad_call).unwrap_err().0.contains("nope"));
        let bad_reg = vec![(
            "main".to_string(),
            vec![Block::new(0, vec![Instruction::Free { ptr: Reg(8) }], Terminator::Halt)],
        )];
        assert!(Program::new("p", bad_reg).is_err());
        let bad_store = vec![(
            "main".to_string(),
            vec![Block::new(0, vec![Instruction::Store { dst: Operand::Imm(1), src: Reg(0) }], Terminator::Halt)],
        )];
        assert!(Program::new("p", bad_store).is_err());
    }

    #[test]
    fn successors_dedup_identical_targets() {
        let t = Terminator::Jif { pos: 0, value: 1, then: 2, otherwise: 2 };
        assert_eq!(t.successors().collect::<Vec<_>>(), vec![2]);
    }
}
