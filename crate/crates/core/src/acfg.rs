//! Attributed control-flow graphs.
//!
//! A function is a directed graph of basic blocks where every block carries a
//! fixed-width vector of non-negative counts. The default attribute layout has
//! 244 instruction-count slots, 8 operand-kind slots and 3 string-count slots.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Number of instruction-count slots in the default schema.
pub const INSTRUCTION_SLOTS: usize = 244;
/// Number of operand-kind slots in the default schema.
pub const OPERAND_SLOTS: usize = 8;
/// Number of string-count slots in the default schema.
pub const STRING_SLOTS: usize = 3;
/// Width of the default attribute vector.
pub const DEFAULT_DIM: usize = INSTRUCTION_SLOTS + OPERAND_SLOTS + STRING_SLOTS;

/// Index of well-known slots in the default schema.
pub mod slot {
    use super::{INSTRUCTION_SLOTS, OPERAND_SLOTS};

    pub const CALL: usize = 0;

    pub const OP_VOID: usize = INSTRUCTION_SLOTS;
    pub const OP_REG: usize = INSTRUCTION_SLOTS + 1;
    pub const OP_MEM: usize = INSTRUCTION_SLOTS + 2;
    pub const OP_PHRASE: usize = INSTRUCTION_SLOTS + 3;
    pub const OP_DISPL: usize = INSTRUCTION_SLOTS + 4;
    pub const OP_IMM: usize = INSTRUCTION_SLOTS + 5;
    pub const OP_FAR: usize = INSTRUCTION_SLOTS + 6;
    pub const OP_NEAR: usize = INSTRUCTION_SLOTS + 7;

    pub const STR_MALLOC: usize = INSTRUCTION_SLOTS + OPERAND_SLOTS;
    pub const STR_CALLOC: usize = INSTRUCTION_SLOTS + OPERAND_SLOTS + 1;
    pub const STR_FREE: usize = INSTRUCTION_SLOTS + OPERAND_SLOTS + 2;
}

const OPERAND_NAMES: [&str; OPERAND_SLOTS] = [
    "operand.void",
    "operand.general_register",
    "operand.direct_memory",
    "operand.base_index",
    "operand.base_displacement",
    "operand.immediate",
    "operand.immediate_far",
    "operand.immediate_near",
];

const STRING_NAMES: [&str; STRING_SLOTS] = ["string.malloc", "string.calloc", "string.free"];

/// Ordered, uniquely named attribute slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("attribute schema is empty")]
    Empty,
    #[error("duplicate attribute name `{0}`")]
    Duplicate(String),
}

impl AttributeSchema {
    pub fn new(names: Vec<String>) -> Result<Self, SchemaError> {
        if names.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(SchemaError::Duplicate(name.clone()));
            }
        }
        Ok(Self { names })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for AttributeSchema {
    fn default() -> Self {
        let mut names = Vec::with_capacity(DEFAULT_DIM);
        names.push(String::from("insn.call"));
        for i in 1..INSTRUCTION_SLOTS {
            names.push(format!("insn.kind_{i:03}"));
        }
        names.extend(OPERAND_NAMES.iter().map(|s| String::from(*s)));
        names.extend(STRING_NAMES.iter().map(|s| String::from(*s)));
        Self { names }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicBlockNode {
    pub id: u32,
    pub attrs: Vec<f64>,
}

impl BasicBlockNode {
    pub fn new(id: u32, attrs: Vec<f64>) -> Self {
        Self { id, attrs }
    }

    pub fn zeroed(id: u32, dim: usize) -> Self {
        Self { id, attrs: alloc::vec![0.0; dim] }
    }
}

/// The ACFG of a single function.
#[derive(Debug, Clone, PartialEq)]
pub struct Acfg {
    pub function_name: String,
    pub entry: u32,
    pub blocks: Vec<BasicBlockNode>,
    pub edges: Vec<(u32, u32)>,
}

/// All function ACFGs of one program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProgramAcfg {
    pub program_name: String,
    pub functions: Vec<Acfg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateBlock(u32),
    EntryMissing(u32),
    EdgeSourceMissing(u32, u32),
    EdgeTargetMissing(u32, u32),
    DuplicateEdge(u32, u32),
    AttributeWidth { block: u32, expected: usize, found: usize },
    AttributeValue { block: u32, slot: usize },
    DuplicateFunction(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateBlock(id) => write!(f, "duplicate block id {id}"),
            Violation::EntryMissing(id) => write!(f, "entry block {id} missing"),
            Violation::EdgeSourceMissing(u, v) => write!(f, "edge source missing: [{u}, {v}]"),
            Violation::EdgeTargetMissing(u, v) => write!(f, "edge target missing: [{u}, {v}]"),
            Violation::DuplicateEdge(u, v) => write!(f, "duplicate edge [{u}, {v}]"),
            Violation::AttributeWidth { block, expected, found } => write!(
                f,
                "attribute width mismatch in block {block}: expected {expected}, found {found}"
            ),
            Violation::AttributeValue { block, slot } => {
                write!(f, "block {block} slot {slot}: attribute must be finite and >= 0")
            }
            Violation::DuplicateFunction(name) => write!(f, "duplicate function `{name}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    Unreachable(u32),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown block id {0}")]
    UnknownBlock(u32),
}

impl Acfg {
    pub fn block_index(&self, id: u32) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    /// Checks every structural invariant against a schema of width `dim`.
    /// Unreachable blocks only produce warnings.
    pub fn validate(&self, dim: usize) -> Validation {
        let mut out = Validation::default();
        let mut ids = BTreeSet::new();
        for block in &self.blocks {
            if !ids.insert(block.id) {
                out.violations.push(Violation::DuplicateBlock(block.id));
            }
            if block.attrs.len() != dim {
                out.violations.push(Violation::AttributeWidth {
                    block: block.id,
                    expected: dim,
                    found: block.attrs.len(),
                });
            }
            if let Some(slot) = block.attrs.iter().position(|x| !x.is_finite() || *x < 0.0) {
                out.violations.push(Violation::AttributeValue { block: block.id, slot });
            }
        }
        if !ids.contains(&self.entry) {
            out.violations.push(Violation::EntryMissing(self.entry));
        }
        let mut seen_edges = BTreeSet::new();
        for &(u, v) in &self.edges {
            if !ids.contains(&u) {
                out.violations.push(Violation::EdgeSourceMissing(u, v));
            }
            if !ids.contains(&v) {
                out.violations.push(Violation::EdgeTargetMissing(u, v));
            }
            if !seen_edges.insert((u, v)) {
                out.violations.push(Violation::DuplicateEdge(u, v));
            }
        }
        if out.violations.is_empty() {
            let reachable = self.reachable_from_entry();
            for block in &self.blocks {
                if !reachable.contains(&block.id) {
                    out.warnings.push(Warning::Unreachable(block.id));
                }
            }
        }
        out
    }

    /// The set `{u : (u, v) in E}`.
    pub fn predecessors(&self, v: u32) -> Result<BTreeSet<u32>, GraphError> {
        if self.block_index(v).is_none() {
            return Err(GraphError::UnknownBlock(v));
        }
        Ok(self.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect())
    }

    /// Predecessor lists by block position, for graphs that already validated.
    pub fn predecessor_indices(&self) -> Vec<Vec<usize>> {
        let index: BTreeMap<u32, usize> =
            self.blocks.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let mut preds = alloc::vec![Vec::new(); self.blocks.len()];
        for (u, v) in &self.edges {
            if let (Some(&ui), Some(&vi)) = (index.get(u), index.get(v)) {
                preds[vi].push(ui);
            }
        }
        preds
    }

    fn reachable_from_entry(&self) -> BTreeSet<u32> {
        let mut succ: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &(u, v) in &self.edges {
            succ.entry(u).or_default().push(v);
        }
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![self.entry];
        while let Some(b) = stack.pop() {
            if seen.insert(b) {
                if let Some(next) = succ.get(&b) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        seen
    }
}

impl ProgramAcfg {
    pub fn validate(&self, dim: usize) -> Validation {
        let mut out = Validation::default();
        let mut names = BTreeSet::new();
        for f in &self.functions {
            if !names.insert(f.function_name.as_str()) {
                out.violations.push(Violation::DuplicateFunction(f.function_name.clone()));
            }
            let v = f.validate(dim);
            out.violations.extend(v.violations);
            out.warnings.extend(v.warnings);
        }
        out
    }

    pub fn function(&self, name: &str) -> Option<&Acfg> {
        self.functions.iter().find(|f| f.function_name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn graph(ids: &[u32], edges: &[(u32, u32)]) -> Acfg {
        Acfg {
            function_name: "f".to_string(),
            entry: ids[0],
            blocks: ids.iter().map(|&id| BasicBlockNode::zeroed(id, DEFAULT_DIM)).collect(),
            edges: edges.to_vec(),
        }
    }

    #[test]
    fn default_schema_layout() {
        let schema = AttributeSchema::default();
        assert_eq!(schema.dim(), 255);
        assert_eq!(schema.index_of("insn.call"), Some(slot::CALL));
        assert_eq!(schema.index_of("operand.void"), Some(244));
        assert_eq!(schema.index_of("operand.immediate"), Some(slot::OP_IMM));
        assert_eq!(schema.index_of("string.malloc"), Some(252));
        assert_eq!(schema.index_of("string.free"), Some(254));
        assert!(AttributeSchema::new(schema.names().to_vec()).is_ok());
    }

    #[test]
    fn schema_rejects_duplicates() {
        let names = vec!["a".to_string(), "b".to_string(), "a".to_string()];
        assert_eq!(AttributeSchema::new(names), Err(SchemaError::Duplicate("a".to_string())));
    }

    #[test]
    fn minimal_graph_is_valid() {
        assert!(graph(&[0], &[]).validate(DEFAULT_DIM).is_ok());
    }

    #[test]
    fn missing_edge_target() {
        let v = graph(&[0], &[(0, 7)]).validate(DEFAULT_DIM);
        assert_eq!(v.violations, vec![Violation::EdgeTargetMissing(0, 7)]);
        assert!(v.violations[0].to_string().contains("edge target missing"));
    }

    #[test]
    fn attribute_width_mismatch() {
        let mut g = graph(&[0], &[]);
        g.blocks[0].attrs.pop();
        let v = g.validate(DEFAULT_DIM);
        assert_eq!(
            v.violations,
            vec![Violation::AttributeWidth { block: 0, expected: 255, found: 254 }]
        );
        assert!(v.violations[0].to_string().contains("attribute width mismatch"));
    }

    #[test]
    fn negative_and_nan_attributes_rejected() {
        let mut g = graph(&[0, 1], &[(0, 1)]);
        g.blocks[0].attrs[3] = -1.0;
        g.blocks[1].attrs[5] = f64::NAN;
        let v = g.validate(DEFAULT_DIM);
        assert_eq!(v.violations.len(), 2);
    }

    #[test]
    fn self_loop_allowed_duplicate_edge_rejected() {
        assert!(graph(&[0], &[(0, 0)]).validate(DEFAULT_DIM).is_ok());
        let v = graph(&[0, 1], &[(0, 1), (0, 1)]).validate(DEFAULT_DIM);
        assert_eq!(v.violations, vec![Violation::DuplicateEdge(0, 1)]);
    }

    #[test]
    fn unreachable_block_warns_only() {
        let v = graph(&[0, 1, 2], &[(0, 1)]).validate(DEFAULT_DIM);
        assert!(v.is_ok());
        assert_eq!(v.warnings, vec![Warning::Unreachable(2)]);
    }

    #[test]
    fn entry_and_duplicates() {
        let mut g = graph(&[0, 0], &[]);
        g.entry = 9;
        let v = g.validate(DEFAULT_DIM);
        assert!(v.violations.contains(&Violation::DuplicateBlock(0)));
        assert!(v.violations.contains(&Violation::EntryMissing(9)));
    }

    #[test]
    fn predecessor_sets() {
        let g = graph(&[1, 2, 3, 4], &[(1, 2), (1, 3), (2, 4)]);
        assert_eq!(g.predecessors(4).unwrap(), [2].into_iter().collect());
        assert!(g.predecessors(1).unwrap().is_empty());
        assert_eq!(g.predecessors(9), Err(GraphError::UnknownBlock(9)));

        let diamond = graph(&[1, 2, 3, 4], &[(1, 2), (1, 3), (2, 4), (3, 4)]);
        assert_eq!(diamond.predecessors(4).unwrap(), [2, 3].into_iter().collect());
        assert_eq!(diamond.predecessor_indices()[3], vec![1, 2]);
    }

    #[test]
    fn duplicate_function_names() {
        let p = ProgramAcfg {
            program_name: "p".to_string(),
            functions: vec![graph(&[0], &[]), graph(&[0], &[])],
        };
        assert_eq!(
            p.validate(DEFAULT_DIM).violations,
            vec![Violation::DuplicateFunction("f".to_string())]
        );
    }
}
