use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{GnnError, Gradients, Hyperparams, ModelParams, Prediction};
use crate::acfg::Acfg;
use crate::synth::Label;

/// Probabilities below this are clamped before taking the logarithm.
pub const PROB_CLAMP: f64 = 1e-12;

/// A graph reduced to what the network reads: predecessor lists and the
/// (optionally standardized) attribute vectors in sparse form.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    preds: Vec<Vec<usize>>,
    feats: Vec<Vec<(usize, f64)>>,
}

impl PreparedGraph {
    pub fn new(acfg: &Acfg, params: &ModelParams) -> Result<Self, GnnError> {
        let a = params.attr_dim();
        let validation = acfg.validate(a);
        if let Some(v) = validation.violations.first() {
            let err = match v {
                crate::acfg::Violation::AttributeWidth { .. } => GnnError::Shape(format!("{v}")),
                _ => GnnError::Graph(acfg.function_name.clone(), format!("{v}")),
            };
            return Err(err);
        }
        let feats = acfg
            .blocks
            .iter()
            .map(|b| match &params.scaling {
                None => b.attrs.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect(),
                Some(s) => b
                    .attrs
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (i, (x - s.mean[i]) * s.inv_std[i]))
                    .filter(|(_, x)| *x != 0.0)
                    .collect(),
            })
            .collect();
        Ok(Self { preds: acfg.predecessor_indices(), feats })
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }
}

/// Activations kept for the backward pass.
struct Trace {
    /// `mu[t][v]` for t in 0..=T; `mu[0]` is all zeros.
    mu: Vec<Vec<Vec<f64>>>,
    /// `agg[t][v]`: predecessor sum fed to sigma in round t (1-based; index 0 unused).
    agg: Vec<Vec<Vec<f64>>>,
    /// `z[t][v][k]`: output of layer `p[k]` in round t, empty when sigma was skipped.
    z: Vec<Vec<Vec<Vec<f64>>>>,
    pooled: Vec<f64>,
    graph_embedding: Vec<f64>,
    logits: [f64; 2],
    probs: [f64; 2],
}

pub fn softmax(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = libm::exp(z[0] - m);
    let e1 = libm::exp(z[1] - m);
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn check(params: &ModelParams, hyper: &Hyperparams) -> Result<(), GnnError> {
    hyper.check()?;
    params.check_shapes(hyper)
}

fn run(graph: &PreparedGraph, params: &ModelParams, iterations: usize) -> Trace {
    let d = params.embed_dim();
    let n = params.depth();
    let blocks = graph.len();

    let base: Vec<Vec<f64>> = graph
        .feats
        .iter()
        .map(|x| {
            let mut out = vec![0.0; d];
            for (r, o) in out.iter_mut().enumerate() {
                let row = params.w1.row(r);
                *o = x.iter().map(|&(i, v)| row[i] * v).sum();
            }
            out
        })
        .collect();

    let mut mu = vec![vec![vec![0.0; d]; blocks]];
    let mut agg = vec![Vec::new()];
    let mut z = vec![Vec::new()];
    for t in 1..=iterations {
        let prev = &mu[t - 1];
        let mut mu_t = Vec::with_capacity(blocks);
        let mut agg_t = Vec::with_capacity(blocks);
        let mut z_t = Vec::with_capacity(blocks);
        for v in 0..blocks {
            let mut s = vec![0.0; d];
            for &u in &graph.preds[v] {
                for (a, b) in s.iter_mut().zip(&prev[u]) {
                    *a += b;
                }
            }
            // sigma is linear without bias, so a zero argument maps to zero.
            let layers = if t > 1 && !graph.preds[v].is_empty() {
                let mut layers = vec![Vec::new(); n];
                let mut input = s.clone();
                for k in (0..n).rev() {
                    let mut out = vec![0.0; d];
                    params.p[k].mul_vec(&input, &mut out);
                    input = out.iter().map(|&x| relu(x)).collect();
                    layers[k] = out;
                }
                layers
            } else {
                Vec::new()
            };
            let mu_v: Vec<f64> = (0..d)
                .map(|i| {
                    let sigma = layers.first().map_or(0.0, |z0| z0[i]);
                    libm::tanh(base[v][i] + sigma)
                })
                .collect();
            mu_t.push(mu_v);
            agg_t.push(s);
            z_t.push(layers);
        }
        mu.push(mu_t);
        agg.push(agg_t);
        z.push(z_t);
    }

    let mut pooled = vec![0.0; d];
    for m in &mu[iterations] {
        for (a, b) in pooled.iter_mut().zip(m) {
            *a += b;
        }
    }
    let mut graph_embedding = vec![0.0; d];
    params.w2.mul_vec(&pooled, &mut graph_embedding);
    let mut logits = [0.0; 2];
    params.w3.mul_vec(&graph_embedding, &mut logits);
    let probs = softmax(logits);
    Trace { mu, agg, z, pooled, graph_embedding, logits, probs }
}

/// Runs the network on one ACFG.
pub fn forward(
    acfg: &Acfg,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> Result<Prediction, GnnError> {
    check(params, hyper)?;
    let graph = PreparedGraph::new(acfg, params)?;
    Ok(forward_prepared(&graph, params, hyper.iterations))
}

pub(crate) fn forward_prepared(
    graph: &PreparedGraph,
    params: &ModelParams,
    iterations: usize,
) -> Prediction {
    let tr = run(graph, params, iterations);
    Prediction { graph_embedding: tr.graph_embedding, logits: tr.logits, probs: tr.probs }
}

/// Cross-entropy `-ln Q[l]` with `Q[l]` clamped to at least [`PROB_CLAMP`].
pub fn loss(probs: [f64; 2], label: Label) -> f64 {
    -libm::log(probs[label.index()].max(PROB_CLAMP))
}

/// [`loss`] for an untyped label.
pub fn loss_raw(probs: [f64; 2], label: u64) -> Result<f64, GnnError> {
    let label = Label::from_index(label).ok_or(GnnError::Label(label))?;
    Ok(loss(probs, label))
}

/// Gradient of the loss for one labeled graph, by reverse-mode
/// differentiation through all `T` unrolled rounds.
pub fn backward(
    acfg: &Acfg,
    params: &ModelParams,
    hyper: &Hyperparams,
    label: Label,
) -> Result<(Gradients, f64), GnnError> {
    check(params, hyper)?;
    let graph = PreparedGraph::new(acfg, params)?;
    Ok(backward_prepared(&graph, params, hyper.iterations, label))
}

pub(crate) fn backward_prepared(
    graph: &PreparedGraph,
    params: &ModelParams,
    iterations: usize,
    label: Label,
) -> (Gradients, f64) {
    let (grad, loss_value, _) = backward_inner(graph, params, iterations, label);
    (grad, loss_value)
}

/// Also returns, per block, the gradient with respect to `W1 x_v`.
fn backward_inner(
    graph: &PreparedGraph,
    params: &ModelParams,
    iterations: usize,
    label: Label,
) -> (Gradients, f64, Vec<Vec<f64>>) {
    let tr = run(graph, params, iterations);
    let loss_value = loss(tr.probs, label);
    let mut grad = Gradients::zeros_like(params);

    let target = label.index();
    if tr.probs[target] < PROB_CLAMP {
        // Clamped region: the loss is locally constant.
        let zeros = vec![vec![0.0; params.embed_dim()]; graph.len()];
        return (grad, loss_value, zeros);
    }
    let mut d_logits = tr.probs;
    d_logits[target] -= 1.0;

    let d = params.embed_dim();
    let n = params.depth();
    let blocks = graph.len();

    grad.w3.add_outer(&d_logits, &tr.graph_embedding);
    let mut d_emb = vec![0.0; d];
    params.w3.add_mul_vec_t(&d_logits, &mut d_emb);
    grad.w2.add_outer(&d_emb, &tr.pooled);
    let mut d_pooled = vec![0.0; d];
    params.w2.add_mul_vec_t(&d_emb, &mut d_pooled);

    // Gradient of W1 x_v accumulated over rounds, one outer product per block at the end.
    let mut d_base = vec![vec![0.0; d]; blocks];
    let mut d_mu = vec![d_pooled; blocks];
    for t in (1..=iterations).rev() {
        let mut d_prev = vec![vec![0.0; d]; blocks];
        for v in 0..blocks {
            let mu_v = &tr.mu[t][v];
            let d_pre: Vec<f64> =
                d_mu[v].iter().zip(mu_v).map(|(g, m)| g * (1.0 - m * m)).collect();
            for (a, b) in d_base[v].iter_mut().zip(&d_pre) {
                *a += b;
            }
            let layers = &tr.z[t][v];
            if layers.is_empty() {
                continue;
            }
            let mut dz = d_pre;
            for k in 0..n {
                if k + 1 < n {
                    let input: Vec<f64> = layers[k + 1].iter().map(|&x| relu(x)).collect();
                    grad.p[k].add_outer(&dz, &input);
                    let mut d_in = vec![0.0; d];
                    params.p[k].add_mul_vec_t(&dz, &mut d_in);
                    dz = d_in
                        .iter()
                        .zip(&layers[k + 1])
                        .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
                        .collect();
                } else {
                    grad.p[k].add_outer(&dz, &tr.agg[t][v]);
                    let mut d_agg = vec![0.0; d];
                    params.p[k].add_mul_vec_t(&dz, &mut d_agg);
                    for &u in &graph.preds[v] {
                        for (a, b) in d_prev[u].iter_mut().zip(&d_agg) {
                            *a += b;
                        }
                    }
                }
            }
        }
        d_mu = d_prev;
    }

    for (v, x) in graph.feats.iter().enumerate() {
        for (r, &g) in d_base[v].iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for &(i, val) in x {
                let cur = grad.w1.get(r, i);
                grad.w1.set(r, i, cur + g * val);
            }
        }
    }
    (grad, loss_value, d_base)
}
