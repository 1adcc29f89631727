//! Intra-generation parallel execution.

use std::thread;

use vulnfuzz_core::acfg::ProgramAcfg;
use vulnfuzz_core::vm::{BlockRef, ExecutionResult, TargetAdapter, TargetError};

/// Runs each batch on up to `jobs` threads. Results come back in input
/// order, so campaigns stay deterministic.
pub struct Parallel<'a, A: ?Sized> {
    inner: &'a A,
    jobs: usize,
}

impl<'a, A: TargetAdapter + Sync + ?Sized> Parallel<'a, A> {
    pub fn new(inner: &'a A, jobs: usize) -> Self {
        Self { inner, jobs: jobs.max(1) }
    }
}

impl<A: TargetAdapter + Sync + ?Sized> TargetAdapter for Parallel<'_, A> {
    fn function_names(&self) -> Vec<String> {
        self.inner.function_names()
    }

    fn execute(&self, input: &[u8], step_limit: u64) -> Result<ExecutionResult, TargetError> {
        self.inner.execute(input, step_limit)
    }

    fn execute_batch(&self, inputs: &[Vec<u8>], step_limit: u64) -> Result<Vec<ExecutionResult>, TargetError> {
        if self.jobs == 1 || inputs.len() < 2 {
            return self.inner.execute_batch(inputs, step_limit);
        }
        let chunk = inputs.len().div_ceil(self.jobs);
        thread::scope(|s| {
            let handles: Vec<_> = inputs
                .chunks(chunk)
                .map(|part| s.spawn(move || self.inner.execute_batch(part, step_limit)))
                .collect();
            let mut out = Vec::with_capacity(inputs.len());
            for h in handles {
                out.extend(h.join().expect("execution thread panicked")?);
            }
            Ok(out)
        })
    }

    fn block_universe(&self) -> Vec<BlockRef> {
        self.inner.block_universe()
    }

    fn acfg(&self) -> ProgramAcfg {
        self.inner.acfg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vulnfuzz_core::vm::{assemble, VmTarget};

    #[test]
    fn matches_sequential_order() {
        let t = VmTarget::new(
            assemble("fn main\nblock 0:\n  jif 0 1 1 2\nblock 1:\n  bug 1 assert 1=2\n  halt\nblock 2:\n  halt\n").unwrap(),
        );
        let inputs: Vec<Vec<u8>> = (0..37u8).map(|i| vec![i % 3, i % 4]).collect();
        let seq = t.execute_batch(&inputs, 100).unwrap();
        for jobs in [2, 3, 8, 64] {
            assert_eq!(Parallel::new(&t, jobs).execute_batch(&inputs, 100).unwrap(), seq);
        }
    }
}
