use serde::{Deserialize, Serialize};
use vulnfuzz_core::scoring::{FunctionScores, SvsMap};

use super::{to_json_pretty, FormatError};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvsDoc {
    kappa: f64,
    omega: f64,
    functions: Vec<FunctionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    name: String,
    p: f64,
    blocks: Vec<BlockDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    id: u32,
    svs: f64,
}

pub fn svs_to_json(map: &SvsMap) -> String {
    let doc = SvsDoc {
        kappa: map.kappa,
        omega: map.omega,
        functions: map
            .functions()
            .iter()
            .map(|f| FunctionDoc {
                name: f.name.clone(),
                p: f.p,
                blocks: f.blocks.iter().map(|&(id, svs)| BlockDoc { id, svs }).collect(),
            })
            .collect(),
    };
    to_json_pretty(&doc)
}

pub fn svs_from_json(text: &str) -> Result<SvsMap, FormatError> {
    let doc: SvsDoc = serde_json::from_str(text)?;
    let functions = doc
        .functions
        .into_iter()
        .map(|f| FunctionScores {
            name: f.name,
            p: f.p,
            blocks: f.blocks.into_iter().map(|b| (b.id, b.svs)).collect(),
        })
        .collect();
    SvsMap::from_scores(doc.kappa, doc.omega, functions).map_err(|e| FormatError::invalid(e.to_string()))
}
