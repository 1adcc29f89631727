use serde::{Deserialize, Serialize};
use vulnfuzz_core::gnn::{FeatureScaling, Hyperparams, Matrix, ModelParams};

use super::{to_json, FormatError};

const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperDoc {
    a: usize,
    d: usize,
    n: usize,
    #[serde(rename = "T")]
    t: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingDoc {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    version: u32,
    hyper: HyperDoc,
    #[serde(rename = "W1")]
    w1: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "W2")]
    w2: Vec<Vec<f64>>,
    #[serde(rename = "W3")]
    w3: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epochs_done: Option<usize>,
}

/// A loaded model together with the architecture it was saved with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub attr_dim: usize,
    pub embed_dim: usize,
    pub depth: usize,
    pub iterations: usize,
    pub epochs_done: Option<usize>,
}

impl Checkpoint {
    /// `base` with the architecture fields replaced by the checkpoint's.
    pub fn hyperparams(&self, base: &Hyperparams) -> Hyperparams {
        Hyperparams {
            attr_dim: self.attr_dim,
            embed_dim: self.embed_dim,
            depth: self.depth,
            iterations: self.iterations,
            ..base.clone()
        }
    }
}

pub fn save_checkpoint(params: &ModelParams, iterations: usize, epochs_done: Option<usize>) -> String {
    let doc = CheckpointDoc {
        version: VERSION,
        hyper: HyperDoc { a: params.attr_dim(), d: params.embed_dim(), n: params.depth(), t: iterations },
        w1: params.w1.to_rows(),
        p: params.p.iter().map(Matrix::to_rows).collect(),
        w2: params.w2.to_rows(),
        w3: params.w3.to_rows(),
        scaling: params.scaling.as_ref().map(|s| ScalingDoc { mean: s.mean.clone(), inv_std: s.inv_std.clone() }),
        epochs_done,
    };
    to_json(&doc)
}

fn matrix(name: &str, rows: &[Vec<f64>], shape: (usize, usize)) -> Result<Matrix, FormatError> {
    let m = Matrix::from_rows(rows)
        .ok_or_else(|| FormatError::invalid(format!("{name}: rows have different lengths")))?;
    // An empty row list carries no column count.
    if m.shape() != shape && !(rows.is_empty() && shape.0 == 0) {
        return Err(FormatError::invalid(format!("{name} is {:?}, expected {shape:?}", m.shape())));
    }
    Ok(m)
}

pub fn load_checkpoint(text: &str) -> Result<Checkpoint, FormatError> {
    let doc: CheckpointDoc = serde_json::from_str(text)?;
    if doc.version != VERSION {
        return Err(FormatError::invalid(format!("unsupported checkpoint version {}", doc.version)));
    }
    let HyperDoc { a, d, n, t } = doc.hyper;
    if a == 0 || d == 0 || n == 0 || t == 0 {
        return Err(FormatError::invalid("hyper a, d, n and T must all be >= 1"));
    }
    if doc.p.len() != n {
        return Err(FormatError::invalid(format!("P has {} layers, expected n = {n}", doc.p.len())));
    }
    let w1 = matrix("W1", &doc.w1, (d, a))?;
    let p = doc
        .p
        .iter()
        .enumerate()
        .map(|(i, m)| matrix(&format!("P{}", i + 1), m, (d, d)))
        .collect::<Result<Vec<_>, _>>()?;
    let w2 = matrix("W2", &doc.w2, (d, d))?;
    let w3 = matrix("W3", &doc.w3, (2, d))?;
    let scaling = match doc.scaling {
        Some(s) if s.mean.len() != a || s.inv_std.len() != a => {
            return Err(FormatError::invalid(format!("scaling width differs from a = {a}")));
        }
        Some(s) => Some(FeatureScaling { mean: s.mean, inv_std: s.inv_std }),
        None => None,
    };
    Ok(Checkpoint {
        params: ModelParams { w1, p, w2, w3, scaling },
        attr_dim: a,
        embed_dim: d,
        depth: n,
        iterations: t,
        epochs_done: doc.epochs_done,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vulnfuzz_core::gnn::init_params;

    #[test]
    fn round_trip_is_exact() {
        let hyper = Hyperparams { attr_dim: 7, embed_dim: 3, depth: 2, ..Hyperparams::desk() };
        let params = init_params(&hyper).unwrap();
        let text = save_checkpoint(&params, 3, Some(4));
        let ck = load_checkpoint(&text).unwrap();
        assert_eq!(ck.params, params);
        assert_eq!((ck.attr_dim, ck.embed_dim, ck.depth, ck.iterations, ck.epochs_done), (7, 3, 2, 3, Some(4)));
        assert_eq!(save_checkpoint(&ck.params, 3, Some(4)), text);
    }

    #[test]
    fn hyper_keys() {
        let hyper = Hyperparams { attr_dim: 2, embed_dim: 1, depth: 1, ..Hyperparams::desk() };
        let text = save_checkpoint(&init_params(&hyper).unwrap(), 3, None);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["hyper"], serde_json::json!({"a": 2, "d": 1, "n": 1, "T": 3}));
        for key in ["W1", "P", "W2", "W3"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("epochs_done").is_none());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let hyper = Hyperparams { attr_dim: 2, embed_dim: 2, depth: 1, ..Hyperparams::desk() };
        let text = save_checkpoint(&init_params(&hyper).unwrap(), 3, None);
        let bad = text.replacen("\"a\":2", "\"a\":3", 1);
        assert!(load_checkpoint(&bad).unwrap_err().to_string().contains("W1"));
        let bad = text.replacen("\"n\":1", "\"n\":2", 1);
        assert!(load_checkpoint(&bad).is_err());
        assert!(matches!(load_checkpoint("{"), Err(FormatError::Syntax { .. })));
    }
}
