use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::program::{Block, Instruction, Operand, Program};
use crate::acfg::{slot, Acfg, BasicBlockNode, ProgramAcfg, DEFAULT_DIM};

fn operand_slot(op: &Operand) -> usize {
    match op {
        Operand::Reg(_) => slot::OP_REG,
        Operand::Imm(_) => slot::OP_IMM,
        Operand::Input(_) => slot::OP_MEM,
        Operand::Phrase { .. } => slot::OP_PHRASE,
        Operand::Displ { .. } => slot::OP_DISPL,
    }
}

/// Attribute vector of one block in the default schema.
///
/// Terminators are not counted, so a block holding only a terminator has
/// the zero vector.
pub fn block_attributes(block: &Block) -> Vec<f64> {
    let mut a = vec![0.0; DEFAULT_DIM];
    for insn in &block.insns {
        match insn {
            Instruction::Nop => a[slot::OP_VOID] += 1.0,
            Instruction::Call(_) => {
                a[slot::CALL] += 1.0;
                a[slot::OP_NEAR] += 1.0;
            }
            Instruction::CmpByte { .. } => {
                a[slot::OP_MEM] += 1.0;
                a[slot::OP_IMM] += 1.0;
            }
            Instruction::Alloc { size, .. } => {
                a[slot::STR_MALLOC] += 1.0;
                a[slot::OP_REG] += 1.0;
                a[operand_slot(size)] += 1.0;
            }
            Instruction::Calloc { size, .. } => {
                a[slot::STR_CALLOC] += 1.0;
                a[slot::OP_REG] += 1.0;
                a[operand_slot(size)] += 1.0;
            }
            Instruction::Free { .. } => {
                a[slot::STR_FREE] += 1.0;
                a[slot::OP_REG] += 1.0;
            }
            Instruction::Load { src, .. } | Instruction::Arith { src, .. } => {
                a[slot::OP_REG] += 1.0;
                a[operand_slot(src)] += 1.0;
            }
            Instruction::Store { dst, .. } => {
                a[operand_slot(dst)] += 1.0;
                a[slot::OP_REG] += 1.0;
            }
            Instruction::BugIf { guard, .. } => {
                a[slot::OP_MEM] += guard.len() as f64;
                a[slot::OP_IMM] += guard.len() as f64;
            }
        }
    }
    a
}

/// One ACFG per function; edges follow terminators, calls stay intra-block.
pub fn extract_acfg(program: &Program) -> ProgramAcfg {
    let functions = program
        .functions()
        .iter()
        .map(|f| {
            let blocks = f.blocks.iter().map(|b| BasicBlockNode::new(b.id, block_attributes(b))).collect();
            let mut seen = BTreeSet::new();
            let mut edges = Vec::new();
            for b in &f.blocks {
                for t in b.term.successors() {
                    if seen.insert((b.id, t)) {
                        edges.push((b.id, t));
                    }
                }
            }
            Acfg { function_name: f.name.clone(), entry: f.entry().id, blocks, edges }
        })
        .collect();
    ProgramAcfg { program_name: program.name.clone(), functions }
}
