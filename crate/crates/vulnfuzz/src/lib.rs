//! File formats, trial comparison and the command-line front end for
//! [`vulnfuzz_core`].

pub mod cmd;
pub mod compare;
pub mod formats;
pub mod manifest;
pub mod parallel;
