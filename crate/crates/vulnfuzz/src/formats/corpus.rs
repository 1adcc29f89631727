use serde::{Deserialize, Serialize};
use vulnfuzz_core::acfg::Acfg;
use vulnfuzz_core::synth::{Label, LabeledGraph};

use super::acfg::{check_acfg, FunctionDoc};
use super::FormatError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    label: u64,
    graph: FunctionDoc,
}

/// One `{"label": 0|1, "graph": {...}}` record per line.
pub fn write_corpus(corpus: &[LabeledGraph]) -> String {
    let mut out = String::new();
    for s in corpus {
        let rec = RecordDoc { label: s.label.index() as u64, graph: FunctionDoc::from(&s.graph) };
        out.push_str(&serde_json::to_string(&rec).expect("in-memory records serialize"));
        out.push('\n');
    }
    out
}

/// Parses a corpus. Every graph must have attribute width `dim`, or the
/// width of the first graph's blocks when `dim` is `None`. Blank lines are
/// skipped; errors carry the 1-based line number.
pub fn read_corpus(text: &str, dim: Option<usize>) -> Result<Vec<LabeledGraph>, FormatError> {
    let mut out = Vec::new();
    let mut dim = dim;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordDoc = serde_json::from_str(line).map_err(|e| FormatError::from(e).at_line(line_no))?;
        let label = Label::from_index(rec.label).ok_or_else(|| {
            FormatError::invalid(format!("label {} is not 0 or 1", rec.label)).at_line(line_no)
        })?;
        let graph = Acfg::from(rec.graph);
        let width = *dim.get_or_insert_with(|| graph.blocks.first().map_or(0, |b| b.attrs.len()));
        check_acfg(&graph, width).map_err(|e| e.at_line(line_no))?;
        out.push(LabeledGraph { graph, label });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vulnfuzz_core::synth::{generate, SynthSpec};

    #[test]
    fn round_trip() {
        let corpus = generate(&SynthSpec { per_class: 5, ..SynthSpec::default() }).unwrap();
        let text = write_corpus(&corpus);
        assert_eq!(text.lines().count(), 10);
        assert_eq!(read_corpus(&text, Some(255)).unwrap(), corpus);
        assert_eq!(read_corpus(&text, None).unwrap(), corpus);
    }

    #[test]
    fn errors_name_the_line() {
        let corpus = generate(&SynthSpec { per_class: 1, ..SynthSpec::default() }).unwrap();
        let mut text = write_corpus(&corpus);
        text.push_str("{\"label\": 3, \"graph\": {\"name\": \"x\", \"entry\": 0, \"blocks\": [], \"edges\": []}}\n");
        match read_corpus(&text, None).unwrap_err() {
            FormatError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_corpus(&write_corpus(&corpus), Some(10)).is_err());
        assert!(matches!(read_corpus("{\"label\": 0", None), Err(FormatError::Syntax { line: 1, .. })));
    }
}
