//! Monte-Carlo plumbing: per-trial substreams, parallel evaluation with an
//! order-stable reduction, and mean ± standard-error summaries.

use rayon::prelude::*;

use crate::scalar::{pairwise_sum, Scalar};
use crate::stream::RandomStream;

/// A Monte-Carlo estimate. `stderr` is the sample standard deviation divided
/// by `sqrt(trials)`; it is zero for a single trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub stderr: T,
    pub trials: usize,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            mean: value,
            stderr: T::zero(),
            trials: 0,
        }
    }

    pub fn from_samples(samples: &[T]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: T::nan(),
                stderr: T::nan(),
                trials: 0,
            };
        }
        let count = T::of_usize(n);
        let mean = pairwise_sum(samples) / count;
        if samples.iter().all(|&x| x == samples[0]) {
            return Self {
                mean: samples[0],
                stderr: T::zero(),
                trials: n,
            };
        }
        let squares: Vec<T> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let variance = pairwise_sum(&squares) / T::of_usize(n - 1);
        Self {
            mean,
            stderr: (variance / count).sqrt(),
            trials: n,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_stderr(&self, other: &Self) -> T {
        (self.stderr * self.stderr + other.stderr * other.stderr).sqrt()
    }
}

/// Evaluates `trial(t, stream_t)` for `t in 0..trials`, where `stream_t` is
/// `stream.substream(t)`. Results come back in trial order, so any reduction
/// over them is independent of the worker count.
pub fn run_trials<V, F>(stream: &RandomStream, trials: usize, trial: F) -> Vec<V>
where
    V: Send,
    F: Fn(usize, &mut RandomStream) -> V + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut sub = stream.substream(t as u64);
            trial(t, &mut sub)
        })
        .collect()
}
