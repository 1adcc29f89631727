//! Textual program format.
//!
//! ```text
//! # comment
//! program demo
//! fn main
//! block 0:
//!   load r0 in[0]
//!   call check
//!   jif 1 0x2a 1 2
//! block 1:
//!   bug 7 assert 2='*' 3=0x41
//!   halt
//! block 2:
//!   ret
//! fn check
//! block 0:
//!   ret
//! ```
//!
//! Byte values may be decimal, `0x` hex or a quoted character. Heap operands
//! are `[rB+rI]`, `[rB+disp]` or `[rB-disp]`; `in[pos]` reads an input byte.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::program::{ArithOp, Block, CrashKind, Instruction, Operand, Program, Reg, Terminator};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Tok<'a> {
    fn err(&self, message: impl Into<String>) -> AsmError {
        AsmError { line: self.line, column: self.column, message: message.into() }
    }
}

fn tokenize(line: &str, line_no: usize) -> Vec<Tok<'_>> {
    let code = match line.find('#') {
        // A '#' inside a quoted byte literal is not a comment.
        Some(i) if !(i > 0 && line[..i].ends_with('\'') && line[i + 1..].starts_with('\'')) => &line[..i],
        _ => line,
    };
    let mut toks = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { text: &code[s..i], line: line_no, column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { text: &code[s..], line: line_no, column: s + 1 });
    }
    toks
}

fn parse_int(tok: &Tok<'_>) -> Result<i64, AsmError> {
    let t = tok.text;
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let v = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16)
    } else {
        body.parse::<i64>()
    }
    .map_err(|_| tok.err(format!("expected an integer, found `{t}`")))?;
    Ok(if neg { -v } else { v })
}

fn parse_u32(tok: &Tok<'_>, what: &str) -> Result<u32, AsmError> {
    let v = parse_int(tok)?;
    u32::try_from(v).map_err(|_| tok.err(format!("{what} must be in 0..=4294967295, found {v}")))
}

fn parse_byte_text(tok: &Tok<'_>, text: &str) -> Result<u8, AsmError> {
    if text.len() >= 3 && text.starts_with('\'') && text.ends_with('\'') {
        let inner = &text[1..text.len() - 1];
        let mut chars = inner.chars();
        return match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii() => Ok(c as u8),
            _ => Err(tok.err(format!("bad character literal {text}"))),
        };
    }
    let sub = Tok { text, ..*tok };
    let v = parse_int(&sub)?;
    u8::try_from(v).map_err(|_| tok.err(format!("byte value must be in 0..=255, found {v}")))
}

fn parse_byte(tok: &Tok<'_>) -> Result<u8, AsmError> {
    parse_byte_text(tok, tok.text)
}

fn parse_reg_text(tok: &Tok<'_>, text: &str) -> Result<Reg, AsmError> {
    text.strip_prefix('r')
        .and_then(|n| n.parse::<u8>().ok())
        .filter(|&n| n < super::program::NUM_REGS)
        .map(Reg)
        .ok_or_else(|| tok.err(format!("expected a register r0..r7, found `{text}`")))
}

fn parse_reg(tok: &Tok<'_>) -> Result<Reg, AsmError> {
    parse_reg_text(tok, tok.text)
}

fn parse_operand(tok: &Tok<'_>) -> Result<Operand, AsmError> {
    let t = tok.text;
    if let Some(pos) = t.strip_prefix("in[").and_then(|r| r.strip_suffix(']')) {
        let sub = Tok { text: pos, ..*tok };
        return Ok(Operand::Input(parse_u32(&sub, "input position")?));
    }
    if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let (base, rest, negative) = match inner.find(['+', '-']) {
            Some(i) => (&inner[..i], &inner[i + 1..], inner.as_bytes()[i] == b'-'),
            None => (inner, "0", false),
        };
        let base = parse_reg_text(tok, base)?;
        if rest.starts_with('r') {
            if negative {
                return Err(tok.err("index register cannot be negated"));
            }
            return Ok(Operand::Phrase { base, index: parse_reg_text(tok, rest)? });
        }
        let disp = parse_int(&Tok { text: rest, ..*tok })?;
        return Ok(Operand::Displ { base, disp: if negative { -disp } else { disp } });
    }
    if t.starts_with('r') {
        return Ok(Operand::Reg(parse_reg(tok)?));
    }
    Ok(Operand::Imm(parse_int(tok)?))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn expect_args<'a>(toks: &[Tok<'a>], n: usize) -> Result<(), AsmError> {
    if toks.len() - 1 != n {
        return Err(toks[0].err(format!(
            "`{}` takes {n} operand(s), found {}",
            toks[0].text,
            toks.len() - 1
        )));
    }
    Ok(())
}

struct PendingBlock {
    id: u32,
    insns: Vec<Instruction>,
    term: Option<Terminator>,
    header: (usize, usize),
}

struct PendingFunction<'a> {
    name: String,
    header: Tok<'a>,
    blocks: Vec<PendingBlock>,
    /// `(target, token)` for every jump, checked once the function is complete.
    jumps: Vec<(u32, Tok<'a>)>,
    calls: Vec<(String, Tok<'a>)>,
}

pub fn assemble(text: &str) -> Result<Program, AsmError> {
    let mut program_name: Option<String> = None;
    let mut functions: Vec<PendingFunction<'_>> = Vec::new();
    let mut last_line = 0;

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let toks = tokenize(line, line_no);
        let Some(head) = toks.first() else { continue };
        match head.text {
            "program" => {
                expect_args(&toks, 1)?;
                if program_name.is_some() || !functions.is_empty() {
                    return Err(head.err("`program` must appear once, before any function"));
                }
                program_name = Some(toks[1].text.to_string());
            }
            "fn" => {
                expect_args(&toks, 1)?;
                if !is_ident(toks[1].text) {
                    return Err(toks[1].err(format!("invalid function name `{}`", toks[1].text)));
                }
                if let Some(prev) = functions.last() {
                    finish_block_check(prev)?;
                }
                functions.push(PendingFunction {
                    name: toks[1].text.to_string(),
                    header: toks[1],
                    blocks: Vec::new(),
                    jumps: Vec::new(),
                    calls: Vec::new(),
                });
            }
            "block" => {
                let f = functions.last_mut().ok_or_else(|| head.err("`block` outside of a function"))?;
                let label = match toks.as_slice() {
                    [_, l] if l.text.ends_with(':') => Tok { text: &l.text[..l.text.len() - 1], ..*l },
                    [_, l, colon] if colon.text == ":" => *l,
                    _ => return Err(head.err("expected `block N:`")),
                };
                let id = parse_u32(&label, "block id")?;
                if let Some(prev) = f.blocks.last() {
                    if prev.term.is_none() {
                        return Err(AsmError {
                            line: prev.header.0,
                            column: prev.header.1,
                            message: format!("block {} has no terminator", prev.id),
                        });
                    }
                }
                if f.blocks.iter().any(|b| b.id == id) {
                    return Err(label.err(format!("duplicate block {id} in `{}`", f.name)));
                }
                f.blocks.push(PendingBlock { id, insns: Vec::new(), term: None, header: (label.line, label.column) });
            }
            _ => {
                let f = functions.last_mut().ok_or_else(|| head.err("instruction outside of a function"))?;
                let block = f.blocks.last_mut().ok_or_else(|| head.err("instruction outside of a block"))?;
                if block.term.is_some() {
                    return Err(head.err(format!("instruction after the terminator of block {}", block.id)));
                }
                match parse_line(&toks)? {
                    Line::Insn(insn) => {
                        if let Instruction::Call(name) = &insn {
                            f.calls.push((name.clone(), toks[1]));
                        }
                        block.insns.push(insn);
                    }
                    Line::Term(term) => {
                        let label_toks: &[Tok<'_>] = match term {
                            Terminator::Jmp(_) => &toks[1..2],
                            Terminator::Jif { .. } => &toks[3..5],
                            _ => &[],
                        };
                        for (t, tok) in term.successors().zip(label_toks.iter()) {
                            f.jumps.push((t, *tok));
                        }
                        if let Terminator::Jif { then, otherwise, .. } = term {
                            if then == otherwise {
                                f.jumps.push((otherwise, toks[4]));
                            }
                        }
                        block.term = Some(term);
                    }
                }
            }
        }
    }

    let Some(last) = functions.last() else {
        return Err(AsmError { line: last_line.max(1), column: 1, message: String::from("program has no functions") });
    };
    finish_block_check(last)?;

    let names: BTreeSet<&str> = functions.iter().map(|f| f.name.as_str()).collect();
    let mut seen = BTreeSet::new();
    for f in &functions {
        if !seen.insert(f.name.as_str()) {
            return Err(f.header.err(format!("duplicate function `{}`", f.name)));
        }
        for (target, tok) in &f.jumps {
            if !f.blocks.iter().any(|b| b.id == *target) {
                return Err(tok.err(format!("undefined label {target} in `{}`", f.name)));
            }
        }
        for (callee, tok) in &f.calls {
            if !names.contains(callee.as_str()) {
                return Err(tok.err(format!("call to undefined function `{callee}`")));
            }
        }
    }

    let functions = functions
        .into_iter()
        .map(|f| {
            let blocks = f
                .blocks
                .into_iter()
                .map(|b| Block::new(b.id, b.insns, b.term.expect("checked above")))
                .collect();
            (f.name, blocks)
        })
        .collect();
    Program::new(program_name.unwrap_or_else(|| String::from("program")), functions)
        .map_err(|e| AsmError { line: 1, column: 1, message: e.0 })
}

fn finish_block_check(f: &PendingFunction<'_>) -> Result<(), AsmError> {
    match f.blocks.last() {
        None => Err(f.header.err(format!("function `{}` has no blocks", f.name))),
        Some(b) if b.term.is_none() => Err(AsmError {
            line: b.header.0,
            column: b.header.1,
            message: format!("block {} has no terminator", b.id),
        }),
        Some(_) => Ok(()),
    }
}

enum Line {
    Insn(Instruction),
    Term(Terminator),
}

fn parse_line(toks: &[Tok<'_>]) -> Result<Line, AsmError> {
    let head = &toks[0];
    let insn = match head.text {
        "nop" => {
            expect_args(toks, 0)?;
            Instruction::Nop
        }
        "call" => {
            expect_args(toks, 1)?;
            if !is_ident(toks[1].text) {
                return Err(toks[1].err(format!("invalid function name `{}`", toks[1].text)));
            }
            Instruction::Call(toks[1].text.to_string())
        }
        "cmp" => {
            expect_args(toks, 2)?;
            Instruction::CmpByte { pos: parse_u32(&toks[1], "input position")?, value: parse_byte(&toks[2])? }
        }
        "alloc" | "calloc" => {
            expect_args(toks, 2)?;
            let dst = parse_reg(&toks[1])?;
            let size = parse_operand(&toks[2])?;
            if !matches!(size, Operand::Reg(_) | Operand::Imm(_) | Operand::Input(_)) {
                return Err(toks[2].err("allocation size must be a register, immediate or input byte"));
            }
            if head.text == "alloc" {
                Instruction::Alloc { dst, size }
            } else {
                Instruction::Calloc { dst, size }
            }
        }
        "free" => {
            expect_args(toks, 1)?;
            Instruction::Free { ptr: parse_reg(&toks[1])? }
        }
        "load" => {
            expect_args(toks, 2)?;
            Instruction::Load { dst: parse_reg(&toks[1])?, src: parse_operand(&toks[2])? }
        }
        "store" => {
            expect_args(toks, 2)?;
            let dst = parse_operand(&toks[1])?;
            if !matches!(dst, Operand::Phrase { .. } | Operand::Displ { .. }) {
                return Err(toks[1].err("store destination must be a heap reference"));
            }
            Instruction::Store { dst, src: parse_reg(&toks[2])? }
        }
        "arith" => {
            expect_args(toks, 3)?;
            let op = ArithOp::parse(toks[1].text)
                .ok_or_else(|| toks[1].err(format!("unknown arithmetic op `{}`", toks[1].text)))?;
            let src = parse_operand(&toks[3])?;
            if !matches!(src, Operand::Reg(_) | Operand::Imm(_) | Operand::Input(_)) {
                return Err(toks[3].err("arithmetic source must be a register, immediate or input byte"));
            }
            Instruction::Arith { op, dst: parse_reg(&toks[2])?, src }
        }
        "bug" => {
            if toks.len() < 3 {
                return Err(head.err("expected `bug ID KIND [POS=VAL]...`"));
            }
            let id = parse_u32(&toks[1], "bug id")?;
            let kind = CrashKind::parse(toks[2].text)
                .ok_or_else(|| toks[2].err(format!("unknown crash kind `{}`", toks[2].text)))?;
            let guard = toks[3..]
                .iter()
                .map(|t| {
                    let (pos, val) = t.text.split_once('=').ok_or_else(|| t.err("expected POS=VAL"))?;
                    Ok((parse_u32(&Tok { text: pos, ..*t }, "input position")?, parse_byte_text(t, val)?))
                })
                .collect::<Result<Vec<_>, AsmError>>()?;
            Instruction::BugIf { id, kind, guard }
        }
        "jmp" => {
            expect_args(toks, 1)?;
            return Ok(Line::Term(Terminator::Jmp(parse_u32(&toks[1], "block id")?)));
        }
        "jif" => {
            expect_args(toks, 4)?;
            return Ok(Line::Term(Terminator::Jif {
                pos: parse_u32(&toks[1], "input position")?,
                value: parse_byte(&toks[2])?,
                then: parse_u32(&toks[3], "block id")?,
                otherwise: parse_u32(&toks[4], "block id")?,
            }));
        }
        "ret" => {
            expect_args(toks, 0)?;
            return Ok(Line::Term(Terminator::Ret));
        }
        "halt" => {
            expect_args(toks, 0)?;
            return Ok(Line::Term(Terminator::Halt));
        }
        other => return Err(head.err(format!("unknown mnemonic `{other}`"))),
    };
    Ok(Line::Insn(insn))
}

/// Canonical text for `program`; [`assemble`] reads it back to an equal program.
pub fn disassemble(program: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {}", program.name);
    for f in program.functions() {
        let _ = writeln!(out, "fn {}", f.name);
        for b in &f.blocks {
            let _ = writeln!(out, "block {}:", b.id);
            for insn in &b.insns {
                let _ = match insn {
                    Instruction::Nop => writeln!(out, "  nop"),
                    Instruction::Call(name) => writeln!(out, "  call {name}"),
                    Instruction::CmpByte { pos, value } => writeln!(out, "  cmp {pos} {value}"),
                    Instruction::Alloc { dst, size } => writeln!(out, "  alloc {dst} {size}"),
                    Instruction::Calloc { dst, size } => writeln!(out, "  calloc {dst} {size}"),
                    Instruction::Free { ptr } => writeln!(out, "  free {ptr}"),
                    Instruction::Load { dst, src } => writeln!(out, "  load {dst} {src}"),
                    Instruction::Store { dst, src } => writeln!(out, "  store {dst} {src}"),
                    Instruction::Arith { op, dst, src } => writeln!(out, "  arith {} {dst} {src}", op.as_str()),
                    Instruction::BugIf { id, kind, guard } => {
                        let _ = write!(out, "  bug {id} {kind}");
                        for (p, v) in guard {
                            let _ = write!(out, " {p}={v}");
                        }
                        writeln!(out)
                    }
                };
            }
            let _ = match b.term {
                Terminator::Jmp(t) => writeln!(out, "  jmp {t}"),
                Terminator::Jif { pos, value, then, otherwise } => {
                    writeln!(out, "  jif {pos} {value} {then} {otherwise}")
                }
                Terminator::Ret => writeln!(out, "  ret"),
                Terminator::Halt => writeln!(out, "  halt"),
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample
program demo
fn main
block 0:
  load r0 in[0]
  load r1 [r2+r3]
  load r1 [r2-4]
  store [r2+8] r1
  alloc r2 16
  calloc r3 in[2]
  free r2
  arith div r0 0x10
  cmp 1 '*'
  call helper
  nop
  jif 1 0x2a 1 2   # branch on a magic byte
block 1:
  bug 7 assert 2='*' 3=65
  halt
block 2:
  ret
fn helper
block 0:
  ret
";

    #[test]
    fn parses_sample() {
        let p = assemble(SAMPLE).unwrap();
        assert_eq!(p.name, "demo");
        assert_eq!(p.function_names(), ["main", "helper"]);
        let main = &p.functions()[0];
        assert_eq!(main.blocks.len(), 3);
        assert_eq!(main.blocks[0].insns[0], Instruction::Load { dst: Reg(0), src: Operand::Input(0) });
        assert_eq!(main.blocks[0].insns[2], Instruction::Load {
            dst: Reg(1),
            src: Operand::Displ { base: Reg(2), disp: -4 }
        });
        assert_eq!(main.blocks[0].insns[8], Instruction::CmpByte { pos: 1, value: b'*' });
        assert_eq!(main.blocks[0].term, Terminator::Jif { pos: 1, value: 42, then: 1, otherwise: 2 });
        assert_eq!(
            main.blocks[1].insns[0],
            Instruction::BugIf { id: 7, kind: CrashKind::Assert, guard: alloc::vec![(2, b'*'), (3, 65)] }
        );
        assert_eq!(assemble(&disassemble(&p)).unwrap(), p);
    }

    #[test]
    fn minimal_halt_program() {
        let p = assemble("fn main\nblock 0:\n  halt\n").unwrap();
        assert_eq!(p.functions().len(), 1);
        assert_eq!(p.name, "program");
    }

    #[test]
    fn undefined_label_is_named() {
        let err = assemble("fn main\nblock 0:\n  jmp 9\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 7));
        assert!(err.message.contains("undefined label 9"), "{err}");
    }

    #[test]
    fn positioned_errors() {
        let err = assemble("fn main\nblock 0:\n  frob r1\n  halt\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 3));
        let err = assemble("fn main\nblock 0:\n  load r9 1\n  halt\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 8));
        let err = assemble("fn main\nblock 0:\n  nop\n").unwrap_err();
        assert!(err.message.contains("no terminator"));
        let err = assemble("fn main\nblock 0:\n  halt\n  nop\n").unwrap_err();
        assert_eq!(err.line, 4);
        let err = assemble("fn main\nblock 0:\n  call ghost\n  halt\n").unwrap_err();
        assert!(err.message.contains("ghost"));
        assert!(assemble("").is_err());
        assert!(assemble("halt\n").is_err());
        assert!(assemble("fn main\nblock 0:\n  cmp 0 256\n  halt\n").is_err());
    }
}
