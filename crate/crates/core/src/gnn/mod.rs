//! Graph embedding network predicting per-function vulnerable probability.
//!
//! Every block `v` starts from a zero embedding. Each of `T` synchronous
//! rounds recomputes
//!
//! ```text
//! mu_v <- tanh(W1 x_v + sigma(sum of mu_u over predecessors u of v))
//! sigma(s) = P1 relu(P2 relu(... relu(Pn s)))
//! ```
//!
//! after which the block embeddings are summed and projected:
//! `mu_g = W2 sum_v mu_v`, `Z = W3 mu_g`, `Q = softmax(Z)`. The first
//! component of `Q` is the vulnerable probability.

mod eval;
mod matrix;
mod network;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use eval::{evaluate, rank_by_probability, EvalReport};
pub use matrix::Matrix;
pub use network::{backward, forward, loss, loss_raw, softmax, PreparedGraph, PROB_CLAMP};
pub use train::{sgd_step, train, train_from, TrainOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GnnError {
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid graph `{0}`: {1}")]
    Graph(String, String),
    #[error("label {0} is not 0 (vulnerable) or 1 (secure)")]
    Label(u64),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("K = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
}

/// Model and training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Attribute vector width (`a`).
    pub attr_dim: usize,
    /// Embedding size (`d`).
    pub embed_dim: usize,
    /// Number of layers in the sigma network (`n`).
    pub depth: usize,
    /// Number of embedding rounds (`T`).
    pub iterations: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    /// Standardize each attribute slot with train-set statistics.
    pub standardize: bool,
}

impl Default for Hyperparams {
    /// Production configuration: d = 256, n = 5, T = 3, lr = 1e-4.
    fn default() -> Self {
        Self {
            attr_dim: crate::acfg::DEFAULT_DIM,
            embed_dim: 256,
            depth: 5,
            iterations: 3,
            learning_rate: 1e-4,
            epochs: 10,
            rng_seed: 0,
            standardize: false,
        }
    }
}

impl Hyperparams {
    /// Small configuration used for tests and desk-scale experiments.
    pub fn desk() -> Self {
        Self { embed_dim: 16, depth: 2, iterations: 3, learning_rate: 0.01, epochs: 50, ..Self::default() }
    }

    pub fn check(&self) -> Result<(), GnnError> {
        if self.attr_dim == 0 || self.embed_dim == 0 || self.depth == 0 || self.iterations == 0 {
            return Err(GnnError::Hyper(alloc::format!(
                "a, d, n, T must be >= 1 (got {}, {}, {}, {})",
                self.attr_dim,
                self.embed_dim,
                self.depth,
                self.iterations
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GnnError::Hyper(alloc::format!(
                "learning rate must be > 0 (got {})",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-slot affine standardization `(x - mean) * inv_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaling {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

impl FeatureScaling {
    /// Mean and population standard deviation per slot over every block.
    /// Constant slots map to zero.
    pub fn fit<'a>(graphs: impl IntoIterator<Item = &'a crate::Acfg>, dim: usize) -> Self {
        let mut sum = alloc::vec![0.0; dim];
        let mut sq = alloc::vec![0.0; dim];
        let mut count = 0usize;
        for g in graphs {
            for b in &g.blocks {
                for (i, x) in b.attrs.iter().take(dim).enumerate() {
                    sum[i] += x;
                    sq[i] += x * x;
                }
                count += 1;
            }
        }
        let n = count.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let inv_std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                let sd = libm::sqrt(var);
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, inv_std }
    }
}

/// Learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// d x a
    pub w1: Matrix,
    /// `p[0]` is P1 (outermost), `p[n-1]` is Pn (applied first). Each d x d.
    pub p: Vec<Matrix>,
    /// d x d
    pub w2: Matrix,
    /// 2 x d
    pub w3: Matrix,
    pub scaling: Option<FeatureScaling>,
}

/// Gradient of the loss with respect to every weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub p: Vec<Matrix>,
    pub w2: Matrix,
    pub w3: Matrix,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let shape = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        Self {
            w1: shape(&params.w1),
            p: params.p.iter().map(shape).collect(),
            w2: shape(&params.w2),
            w3: shape(&params.w3),
        }
    }

    pub fn norm(&self) -> f64 {
        let sq = self.w1.sum_squares()
            + self.p.iter().map(Matrix::sum_squares).sum::<f64>()
            + self.w2.sum_squares()
            + self.w3.sum_squares();
        libm::sqrt(sq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Pooled graph embedding `mu_g`.
    pub graph_embedding: Vec<f64>,
    pub logits: [f64; 2],
    pub probs: [f64; 2],
}

impl Prediction {
    /// Vulnerable probability `p = Q[0]`.
    pub fn p(&self) -> f64 {
        self.probs[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Uniform in `[-1/sqrt(d), 1/sqrt(d)]`.
    Uniform,
    Zero,
}

impl ModelParams {
    pub fn init(hyper: &Hyperparams, init: Init) -> Result<Self, GnnError> {
        hyper.check()?;
        let (a, d) = (hyper.attr_dim, hyper.embed_dim);
        let bound = 1.0 / libm::sqrt(d as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.rng_seed);
        let mut draw = |rows, cols| match init {
            Init::Uniform => Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound)),
            Init::Zero => Matrix::zeros(rows, cols),
        };
        let w1 = draw(d, a);
        let p = (0..hyper.depth).map(|_| draw(d, d)).collect();
        let w2 = draw(d, d);
        let w3 = draw(2, d);
        Ok(Self { w1, p, w2, w3, scaling: None })
    }

    pub fn attr_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn embed_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn depth(&self) -> usize {
        self.p.len()
    }

    /// Verifies every matrix shape against `hyper`.
    pub fn check_shapes(&self, hyper: &Hyperparams) -> Result<(), GnnError> {
        let (a, d) = (hyper.attr_dim, hyper.embed_dim);
        let mut problems = Vec::new();
        if self.w1.shape() != (d, a) {
            problems.push(alloc::format!("W1 is {:?}, expected ({d}, {a})", self.w1.shape()));
        }
        if self.p.len() != hyper.depth {
            problems.push(alloc::format!("{} sigma layers, expected {}", self.p.len(), hyper.depth));
        }
        for (i, p) in self.p.iter().enumerate() {
            if p.shape() != (d, d) {
                problems.push(alloc::format!("P{} is {:?}, expected ({d}, {d})", i + 1, p.shape()));
            }
        }
        if self.w2.shape() != (d, d) {
            problems.push(alloc::format!("W2 is {:?}, expected ({d}, {d})", self.w2.shape()));
        }
        if self.w3.shape() != (2, d) {
            problems.push(alloc::format!("W3 is {:?}, expected (2, {d})", self.w3.shape()));
        }
        if let Some(s) = &self.scaling {
            if s.mean.len() != a || s.inv_std.len() != a {
                problems.push(alloc::format!("scaling width differs from a = {a}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(GnnError::Shape(problems.join("; ")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.p.iter().all(Matrix::is_finite)
            && self.w2.is_finite()
            && self.w3.is_finite()
    }

    /// `self += scale * grad`
    pub fn apply(&mut self, grad: &Gradients, scale: f64) {
        self.w1.add_scaled(&grad.w1, scale);
        for (p, g) in self.p.iter_mut().zip(&grad.p) {
            p.add_scaled(g, scale);
        }
        self.w2.add_scaled(&grad.w2, scale);
        self.w3.add_scaled(&grad.w3, scale);
    }
}

/// Uniform initialization in `[-1/sqrt(d), 1/sqrt(d)]`.
pub fn init_params(hyper: &Hyperparams) -> Result<ModelParams, GnnError> {
    ModelParams::init(hyper, Init::Uniform)
}
