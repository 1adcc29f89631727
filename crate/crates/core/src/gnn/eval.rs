use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::network::{forward_prepared, loss, PreparedGraph};
use super::{GnnError, Hyperparams, ModelParams};
use crate::synth::{Label, LabeledGraph};

/// Top-K accuracy, recall and mean loss over a labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Fraction of vulnerable samples among the K highest-probability ones.
    pub accuracy_at_k: BTreeMap<usize, f64>,
    /// Top-K accuracy at K = number of vulnerable samples (0 when there are none).
    pub recall: f64,
    pub mean_loss: f64,
}

/// Sample indices by descending vulnerable probability; ties keep input order.
pub fn rank_by_probability(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    order
}

impl EvalReport {
    pub fn from_predictions(
        probs: &[[f64; 2]],
        labels: &[Label],
        ks: &[usize],
    ) -> Result<Self, GnnError> {
        let n = probs.len();
        if n == 0 {
            return Err(GnnError::EmptyCorpus);
        }
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
            return Err(GnnError::KOutOfRange { k, n });
        }
        let p: Vec<f64> = probs.iter().map(|q| q[0]).collect();
        let order = rank_by_probability(&p);
        // hits[k] = vulnerable samples among the top k
        let mut hits = Vec::with_capacity(n + 1);
        hits.push(0usize);
        for &i in &order {
            let last = *hits.last().unwrap();
            hits.push(last + usize::from(labels[i] == Label::Vulnerable));
        }
        let accuracy_at_k = ks.iter().map(|&k| (k, hits[k] as f64 / k as f64)).collect();
        let vulnerable = hits[n];
        let recall = if vulnerable == 0 { 0.0 } else { hits[vulnerable] as f64 / vulnerable as f64 };
        let mean_loss =
            probs.iter().zip(labels).map(|(q, &l)| loss(*q, l)).sum::<f64>() / n as f64;
        Ok(Self { accuracy_at_k, recall, mean_loss })
    }
}

pub fn evaluate(
    test: &[LabeledGraph],
    params: &ModelParams,
    hyper: &Hyperparams,
    ks: &[usize],
) -> Result<EvalReport, GnnError> {
    hyper.check()?;
    params.check_shapes(hyper)?;
    let probs = test
        .iter()
        .map(|s| {
            let g = PreparedGraph::new(&s.graph, params)?;
            Ok(forward_prepared(&g, params, hyper.iterations).probs)
        })
        .collect::<Result<Vec<_>, GnnError>>()?;
    let labels: Vec<Label> = test.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(&probs, &labels, ks)
}
