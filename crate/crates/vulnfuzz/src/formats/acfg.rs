use serde::{Deserialize, Serialize};
use vulnfuzz_core::acfg::{Acfg, BasicBlockNode, ProgramAcfg};

use super::{to_json, FormatError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramDoc {
    program: String,
    schema_dim: usize,
    functions: Vec<FunctionDoc>,
}

/// One function in the ACFG document; also the `graph` of a corpus record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    name: String,
    entry: u32,
    blocks: Vec<BlockDoc>,
    edges: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    id: u32,
    attrs: Vec<f64>,
}

impl From<&Acfg> for FunctionDoc {
    fn from(g: &Acfg) -> Self {
        Self {
            name: g.function_name.clone(),
            entry: g.entry,
            blocks: g.blocks.iter().map(|b| BlockDoc { id: b.id, attrs: b.attrs.clone() }).collect(),
            edges: g.edges.clone(),
        }
    }
}

impl From<FunctionDoc> for Acfg {
    fn from(d: FunctionDoc) -> Self {
        Acfg {
            function_name: d.name,
            entry: d.entry,
            blocks: d.blocks.into_iter().map(|b| BasicBlockNode::new(b.id, b.attrs)).collect(),
            edges: d.edges,
        }
    }
}

pub(crate) fn check_acfg(g: &Acfg, dim: usize) -> Result<(), FormatError> {
    let v = g.validate(dim);
    if v.is_ok() {
        return Ok(());
    }
    let msgs: Vec<String> = v.violations.iter().map(ToString::to_string).collect();
    Err(FormatError::invalid(format!("function `{}`: {}", g.function_name, msgs.join("; "))))
}

/// Serializes a valid program ACFG whose attribute vectors have width `schema_dim`.
pub fn acfg_to_json(program: &ProgramAcfg, schema_dim: usize) -> Result<String, FormatError> {
    let v = program.validate(schema_dim);
    if !v.is_ok() {
        let msgs: Vec<String> = v.violations.iter().map(ToString::to_string).collect();
        return Err(FormatError::invalid(msgs.join("; ")));
    }
    let doc = ProgramDoc {
        program: program.program_name.clone(),
        schema_dim,
        functions: program.functions.iter().map(FunctionDoc::from).collect(),
    };
    Ok(to_json(&doc))
}

/// Parses and validates an ACFG document, returning it with its schema width.
pub fn acfg_from_json(text: &str) -> Result<(ProgramAcfg, usize), FormatError> {
    let doc: ProgramDoc = serde_json::from_str(text)?;
    let program = ProgramAcfg {
        program_name: doc.program,
        functions: doc.functions.into_iter().map(Acfg::from).collect(),
    };
    let v = program.validate(doc.schema_dim);
    if !v.is_ok() {
        let msgs: Vec<String> = v.violations.iter().map(ToString::to_string).collect();
        return Err(FormatError::invalid(msgs.join("; ")));
    }
    Ok((program, doc.schema_dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ProgramAcfg {
        let f = |name: &str, n: u32| Acfg {
            function_name: name.to_string(),
            entry: 0,
            blocks: (0..n).map(|i| BasicBlockNode::new(i, vec![i as f64, 0.5, 1e-300])).collect(),
            edges: (1..n).map(|i| (i - 1, i)).collect(),
        };
        ProgramAcfg { program_name: "p".to_string(), functions: vec![f("a", 3), f("b", 1)] }
    }

    #[test]
    fn round_trip() {
        let text = acfg_to_json(&sample(), 3).unwrap();
        assert_eq!(acfg_from_json(&text).unwrap(), (sample(), 3));
    }

    #[test]
    fn empty_function_list() {
        let (p, dim) = acfg_from_json(r#"{"program": "x", "schema_dim": 255, "functions": []}"#).unwrap();
        assert!(p.functions.is_empty());
        assert_eq!(dim, 255);
    }

    #[test]
    fn truncated_document_is_positioned() {
        let text = acfg_to_json(&sample(), 3).unwrap();
        let cut = &text[..text.len() / 2];
        match acfg_from_json(cut).unwrap_err() {
            FormatError::Syntax { line, column, .. } => assert!(line == 1 && column > 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_fields_and_bad_graphs() {
        let unknown = r#"{"program": "x", "schema_dim": 1, "functions": [], "extra": 1}"#;
        assert!(matches!(acfg_from_json(unknown), Err(FormatError::Syntax { .. })));
        let width = r#"{"program": "x", "schema_dim": 2, "functions": [
            {"name": "f", "entry": 0, "blocks": [{"id": 0, "attrs": [1]}], "edges": []}]}"#;
        let err = acfg_from_json(width).unwrap_err().to_string();
        assert!(err.contains("attribute width mismatch"), "{err}");
        let edge = r#"{"program": "x", "schema_dim": 1, "functions": [
            {"name": "f", "entry": 0, "blocks": [{"id": 0, "attrs": [1]}], "edges": [[0, 7]]}]}"#;
        assert!(acfg_from_json(edge).unwrap_err().to_string().contains("edge target missing"));
    }
}
