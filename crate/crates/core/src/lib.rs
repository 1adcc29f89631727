//! Vulnerability-oriented evolutionary fuzzing.
//!
//! The pipeline has three stages that share this crate:
//!
//! 1. [`acfg`] and [`synth`] describe functions as attributed control-flow
//!    graphs and produce labeled training corpora.
//! 2. [`gnn`] is a graph embedding network that maps an ACFG to the
//!    probability that the function is vulnerable. [`scoring`] turns those
//!    probabilities into per-block static vulnerable scores and path fitness.
//! 3. [`fuzz`] runs a generational fuzzer that keeps the inputs whose paths
//!    accumulate the most score, switching between slight and heavy mutation
//!    with the crash-window schedule. [`vm`] provides the instrumented toy
//!    target it is exercised against.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `vulnfuzz` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod acfg;
pub mod fuzz;
pub mod gnn;
pub mod scoring;
pub mod synth;
pub mod vm;

pub use acfg::{Acfg, AttributeSchema, BasicBlockNode, ProgramAcfg};
pub use gnn::{Hyperparams, ModelParams, Prediction};
pub use scoring::SvsMap;
