use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{backward_prepared, PreparedGraph};
use super::{init_params, FeatureScaling, GnnError, Hyperparams, ModelParams};
use crate::synth::LabeledGraph;

const SHUFFLE_SALT: u64 = 0x5eed_0f_e90c;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training loss of each epoch, measured before each update.
    pub loss_trace: Vec<f64>,
}

/// One plain SGD update: `params -= lr * grad`. Returns the pre-update loss.
pub fn sgd_step(
    params: &mut ModelParams,
    sample: &LabeledGraph,
    hyper: &Hyperparams,
) -> Result<f64, GnnError> {
    params.check_shapes(hyper)?;
    let graph = PreparedGraph::new(&sample.graph, params)?;
    let (grad, loss) = backward_prepared(&graph, params, hyper.iterations, sample.label);
    params.apply(&grad, -hyper.learning_rate);
    Ok(loss)
}

/// Initializes parameters from `hyper.rng_seed` and trains for `hyper.epochs`.
pub fn train(corpus: &[LabeledGraph], hyper: &Hyperparams) -> Result<TrainOutcome, GnnError> {
    let mut params = init_params(hyper)?;
    if hyper.standardize {
        params.scaling = Some(FeatureScaling::fit(corpus.iter().map(|s| &s.graph), hyper.attr_dim));
    }
    train_from(params, corpus, hyper, 0)
}

/// Continues training at epoch `start_epoch` up to `hyper.epochs`.
///
/// The visiting order of each epoch depends only on the seed and the epoch
/// number, so resuming from a checkpoint replays the uninterrupted run.
pub fn train_from(
    mut params: ModelParams,
    corpus: &[LabeledGraph],
    hyper: &Hyperparams,
    start_epoch: usize,
) -> Result<TrainOutcome, GnnError> {
    hyper.check()?;
    params.check_shapes(hyper)?;
    if corpus.is_empty() {
        return Err(GnnError::EmptyCorpus);
    }
    let prepared = corpus
        .iter()
        .map(|s| PreparedGraph::new(&s.graph, &params))
        .collect::<Result<Vec<_>, _>>()?;

    let mut loss_trace = Vec::new();
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    for epoch in start_epoch..hyper.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.rng_seed ^ SHUFFLE_SALT);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (grad, loss) =
                backward_prepared(&prepared[i], &params, hyper.iterations, corpus[i].label);
            params.apply(&grad, -hyper.learning_rate);
            total += loss;
        }
        loss_trace.push(total / corpus.len() as f64);
    }
    Ok(TrainOutcome { params, loss_trace })
}
