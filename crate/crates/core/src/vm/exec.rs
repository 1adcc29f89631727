use alloc::vec;
use alloc::vec::Vec;

use super::program::{ArithOp, Instruction, Operand, Program, Reg, Terminator, MAX_ALLOC, NUM_REGS};
use super::{BlockRef, CrashKind, ExecutionResult, Outcome, MAX_CALL_DEPTH};

struct Chunk {
    data: Vec<u8>,
    freed: bool,
}

struct Machine<'a> {
    input: &'a [u8],
    regs: [i64; NUM_REGS as usize],
    /// Pointer values are `index + 1` into `heap`; 0 is null.
    heap: Vec<Chunk>,
}

enum Fault {
    Crash(CrashKind, Option<u32>),
}

impl Machine<'_> {
    fn byte(&self, pos: u32) -> u8 {
        self.input.get(pos as usize).copied().unwrap_or(0)
    }

    fn reg(&self, r: Reg) -> i64 {
        self.regs[r.0 as usize]
    }

    fn value(&self, op: &Operand) -> i64 {
        match *op {
            Operand::Reg(r) => self.reg(r),
            Operand::Imm(v) => v,
            Operand::Input(p) => i64::from(self.byte(p)),
            // Heap operands go through `heap_slot`.
            Operand::Phrase { .. } | Operand::Displ { .. } => 0,
        }
    }

    /// `(chunk, offset)` for a heap operand, or `None` when it is out of bounds,
    /// freed or not a pointer.
    fn heap_slot(&self, op: &Operand) -> Option<(usize, usize)> {
        let (ptr, off) = match *op {
            Operand::Phrase { base, index } => (self.reg(base), self.reg(index)),
            Operand::Displ { base, disp } => (self.reg(base), disp),
            _ => return None,
        };
        let chunk = usize::try_from(ptr.checked_sub(1)?).ok()?;
        let c = self.heap.get(chunk)?;
        let off = usize::try_from(off).ok()?;
        (!c.freed && off < c.data.len()).then_some((chunk, off))
    }

    fn alloc(&mut self, size: i64) -> i64 {
        let size = size.clamp(0, MAX_ALLOC) as usize;
        self.heap.push(Chunk { data: vec![0; size], freed: false });
        self.heap.len() as i64
    }

    fn step(&mut self, insn: &Instruction) -> Result<(), Fault> {
        match insn {
            Instruction::Nop | Instruction::Call(_) | Instruction::CmpByte { .. } => {}
            Instruction::Alloc { dst, size } | Instruction::Calloc { dst, size } => {
                let n = self.value(size);
                self.regs[dst.0 as usize] = self.alloc(n);
            }
            Instruction::Free { ptr } => {
                let p = self.reg(*ptr);
                if p != 0 {
                    let chunk = usize::try_from(p - 1).ok().and_then(|i| self.heap.get_mut(i));
                    match chunk {
                        Some(c) if !c.freed => c.freed = true,
                        _ => return Err(Fault::Crash(CrashKind::DoubleFree, None)),
                    }
                }
            }
            Instruction::Load { dst, src } => {
                let v = match src {
                    Operand::Phrase { .. } | Operand::Displ { .. } => {
                        let (c, o) = self.heap_slot(src).ok_or(Fault::Crash(CrashKind::OobRead, None))?;
                        i64::from(self.heap[c].data[o])
                    }
                    other => self.value(other),
                };
                self.regs[dst.0 as usize] = v;
            }
            Instruction::Store { dst, src } => {
                let (c, o) = self.heap_slot(dst).ok_or(Fault::Crash(CrashKind::OobWrite, None))?;
                self.heap[c].data[o] = self.reg(*src) as u8;
            }
            Instruction::Arith { op, dst, src } => {
                let a = self.reg(*dst);
                let b = self.value(src);
                let r = match op {
                    ArithOp::Add => a.wrapping_add(b),
                    ArithOp::Sub => a.wrapping_sub(b),
                    ArithOp::Mul => a.wrapping_mul(b),
                    ArithOp::Div | ArithOp::Mod if b == 0 => {
                        return Err(Fault::Crash(CrashKind::DivZero, None));
                    }
                    ArithOp::Div => a.wrapping_div(b),
                    ArithOp::Mod => a.wrapping_rem(b),
                };
                self.regs[dst.0 as usize] = r;
            }
            Instruction::BugIf { id, kind, guard } => {
                if guard.iter().all(|&(p, v)| self.byte(p) == v) {
                    return Err(Fault::Crash(*kind, Some(*id)));
                }
            }
        }
        Ok(())
    }
}

/// Frame of a suspended caller: function, block index, next instruction.
type Frame = (usize, usize, usize);

/// Runs `program` on `input`, entering at most `step_limit` blocks.
pub fn execute(program: &Program, input: &[u8], step_limit: u64) -> ExecutionResult {
    let functions = program.functions();
    let mut m = Machine { input, regs: [0; NUM_REGS as usize], heap: Vec::new() };
    let mut path = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let (mut func, mut block, mut pc) = (0usize, 0usize, 0usize);

    let finish = |path: Vec<BlockRef>, outcome| {
        let steps = path.len() as u64;
        ExecutionResult { path, outcome, steps }
    };

    // Enter the current block; false when the step limit is exhausted.
    let enter = |path: &mut Vec<BlockRef>, func: usize, block: usize| {
        if path.len() as u64 >= step_limit {
            return false;
        }
        path.push(BlockRef::new(func as u32, functions[func].blocks[block].id));
        true
    };

    if !enter(&mut path, func, block) {
        return finish(path, Outcome::LimitStop);
    }
    loop {
        let b = &functions[func].blocks[block];
        if let Some(insn) = b.insns.get(pc) {
            pc += 1;
            if let Instruction::Call(name) = insn {
                if stack.len() >= MAX_CALL_DEPTH {
                    return finish(path, Outcome::LimitStop);
                }
                let callee = program.function_index(name).expect("validated program");
                stack.push((func, block, pc));
                (func, block, pc) = (callee, 0, 0);
                if !enter(&mut path, func, block) {
                    return finish(path, Outcome::LimitStop);
                }
                continue;
            }
            if let Err(Fault::Crash(kind, bug_id)) = m.step(insn) {
                let site = *path.last().expect("entry block was entered");
                return finish(path, Outcome::Crash { kind, site, bug_id });
            }
            continue;
        }
        let next = match b.term {
            Terminator::Jmp(t) => t,
            Terminator::Jif { pos, value, then, otherwise } => {
                if m.byte(pos) == value {
                    then
                } else {
                    otherwise
                }
            }
            Terminator::Halt => return finish(path, Outcome::Exit),
            Terminator::Ret => match stack.pop() {
                None => return finish(path, Outcome::Exit),
                Some(frame) => {
                    (func, block, pc) = frame;
                    if !enter(&mut path, func, block) {
                        return finish(path, Outcome::LimitStop);
                    }
                    continue;
                }
            },
        };
        block = functions[func].block_index(next).expect("validated program");
        pc = 0;
        if !enter(&mut path, func, block) {
            return finish(path, Outcome::LimitStop);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::assemble;

    fn run(src: &str, input: &[u8], limit: u64) -> ExecutionResult {
        execute(&assemble(src).unwrap(), input, limit)
    }

    #[test]
    fn magic_byte_guard() {
        let src = "fn main\nblock 0:\n  bug 1 assert 0='*'\n  halt\n";
        let r = run(src, b"*", 100);
        assert_eq!(r.outcome, Outcome::Crash { kind: CrashKind::Assert, site: BlockRef::new(0, 0), bug_id: Some(1) });
        assert_eq!(r.path, [BlockRef::new(0, 0)]);
        assert_eq!(run(src, b"x", 100).outcome, Outcome::Exit);
        assert_eq!(run(src, b"", 100).outcome, Outcome::Exit);
    }

    #[test]
    fn straight_line() {
        let r = run("fn main\nblock 0:\n  jmp 1\nblock 1:\n  jmp 2\nblock 2:\n  ret\n", b"", 100);
        assert_eq!(r.path.len(), 3);
        assert_eq!(r.steps, 3);
        assert_eq!(r.outcome, Outcome::Exit);
    }

    #[test]
    fn infinite_loop_stops_at_limit() {
        let r = run("fn main\nblock 0:\n  jmp 1\nblock 1:\n  jmp 0\n", b"", 37);
        assert_eq!(r.outcome, Outcome::LimitStop);
        assert_eq!(r.path.len(), 37);
        assert_eq!(r.steps, 37);
    }

    #[test]
    fn call_and_return_re_enter_caller() {
        let src = "fn main\nblock 0:\n  call f\n  jmp 1\nblock 1:\n  halt\nfn f\nblock 5:\n  ret\n";
        let r = run(src, b"", 100);
        let b = BlockRef::new;
        assert_eq!(r.path, [b(0, 0), b(1, 5), b(0, 0), b(0, 1)]);
        assert_eq!(r.outcome, Outcome::Exit);
    }

    #[test]
    fn unbounded_recursion_is_limit_stop() {
        let r = run("fn main\nblock 0:\n  call main\n  halt\n", b"", 1000);
        assert_eq!(r.outcome, Outcome::LimitStop);
        assert_eq!(r.path.len(), MAX_CALL_DEPTH + 1);
    }

    #[test]
    fn memory_faults() {
        let oob_write = "fn main\nblock 0:\n  alloc r1 4\n  load r2 in[0]\n  store [r1+r2] r0\n  halt\n";
        assert_eq!(run(oob_write, &[3], 10).outcome, Outcome::Exit);
        assert!(matches!(
            run(oob_write, &[4], 10).outcome,
            Outcome::Crash { kind: CrashKind::OobWrite, bug_id: None, .. }
        ));
        let oob_read = "fn main\nblock 0:\n  calloc r1 2\n  load r0 [r1+2]\n  halt\n";
        assert!(matches!(run(oob_read, b"", 10).outcome, Outcome::Crash { kind: CrashKind::OobRead, .. }));
        let uaf = "fn main\nblock 0:\n  alloc r1 2\n  free r1\n  load r0 [r1+0]\n  halt\n";
        assert!(matches!(run(uaf, b"", 10).outcome, Outcome::Crash { kind: CrashKind::OobRead, .. }));
        let dfree = "fn main\nblock 0:\n  alloc r1 2\n  free r1\n  free r1\n  halt\n";
        assert!(matches!(run(dfree, b"", 10).outcome, Outcome::Crash { kind: CrashKind::DoubleFree, .. }));
        let null_free = "fn main\nblock 0:\n  free r1\n  halt\n";
        assert_eq!(run(null_free, b"", 10).outcome, Outcome::Exit);
        let div = "fn main\nblock 0:\n  arith div r0 in[0]\n  halt\n";
        assert!(matches!(run(div, &[0], 10).outcome, Outcome::Crash { kind: CrashKind::DivZero, .. }));
        assert_eq!(run(div, &[2], 10).outcome, Outcome::Exit);
    }

    #[test]
    fn crash_site_is_last_path_entry() {
        let src = "fn main\nblock 0:\n  call f\n  halt\nfn f\nblock 0:\n  jif 0 1 1 2\nblock 1:\n  bug 3 oob_write 1=2\n  ret\nblock 2:\n  ret\n";
        let r = run(src, &[1, 2], 10);
        match r.outcome {
            Outcome::Crash { site, bug_id, .. } => {
                assert_eq!(site, *r.path.last().unwrap());
                assert_eq!(site, BlockRef::new(1, 1));
                assert_eq!(bug_id, Some(3));
            }
            other => panic!("{other:?}"),
        }
    }
}
