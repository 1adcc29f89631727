use serde::{Deserialize, Serialize};
use vulnfuzz_core::vm::GroundTruthBug;

use super::{to_json_pretty, FormatError};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthDoc {
    bugs: Vec<BugDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BugDoc {
    id: u32,
    function: String,
    trigger_input_hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block: Option<u32>,
}

/// A ground-truth entry as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthBug {
    pub id: u32,
    pub function: String,
    pub trigger_input: Vec<u8>,
    pub kind: Option<String>,
    pub block: Option<u32>,
}

impl From<&GroundTruthBug> for TruthBug {
    fn from(b: &GroundTruthBug) -> Self {
        Self {
            id: b.id,
            function: b.function.clone(),
            trigger_input: b.trigger_input.clone(),
            kind: Some(b.kind.as_str().to_string()),
            block: Some(b.block),
        }
    }
}

pub fn truth_to_json(bugs: &[TruthBug]) -> String {
    let doc = TruthDoc {
        bugs: bugs
            .iter()
            .map(|b| BugDoc {
                id: b.id,
                function: b.function.clone(),
                trigger_input_hex: hex::encode(&b.trigger_input),
                kind: b.kind.clone(),
                block: b.block,
            })
            .collect(),
    };
    to_json_pretty(&doc)
}

pub fn truth_from_json(text: &str) -> Result<Vec<TruthBug>, FormatError> {
    let doc: TruthDoc = serde_json::from_str(text)?;
    doc.bugs
        .into_iter()
        .map(|b| {
            let trigger_input = hex::decode(&b.trigger_input_hex)
                .map_err(|e| FormatError::invalid(format!("bug {}: trigger_input_hex: {e}", b.id)))?;
            Ok(TruthBug { id: b.id, function: b.function, trigger_input, kind: b.kind, block: b.block })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_minimal_form() {
        let bugs = vec![TruthBug {
            id: 3,
            function: "fn_1".to_string(),
            trigger_input: vec![0, 0x2a, 0xff],
            kind: Some("assert".to_string()),
            block: Some(2),
        }];
        let text = truth_to_json(&bugs);
        assert!(text.contains("\"trigger_input_hex\": \"002aff\""));
        assert_eq!(truth_from_json(&text).unwrap(), bugs);
        let minimal = r#"{"bugs": [{"id": 1, "function": "f", "trigger_input_hex": "41"}]}"#;
        assert_eq!(truth_from_json(minimal).unwrap()[0].trigger_input, b"A");
        assert!(truth_from_json(r#"{"bugs": [{"id": 1, "function": "f", "trigger_input_hex": "4"}]}"#).is_err());
    }
}
