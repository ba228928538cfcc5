//! Finite task environments with Bernoulli per-task data.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Task distribution of the reference experiment (ten tasks).
pub const REFERENCE_TASK_PROBS: [f64; 10] =
    [0.05, 0.1, 0.02, 0.2, 0.01, 0.05, 0.02, 0.15, 0.1, 0.3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId(pub usize);

/// Binary samples drawn i.i.d. from one task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<u8>,
}

impl Dataset {
    pub fn new(samples: Vec<u8>) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|&&z| z > 1) {
            return Err(Error::InvalidParameter(format!(
                "dataset entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of ones.
    pub fn count_ones(&self) -> usize {
        self.samples.iter().filter(|&&z| z == 1).count()
    }

    pub fn mean<T: Scalar>(&self) -> Result<T> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(T::of_usize(self.count_ones()) / T::of_usize(self.len()))
    }
}

/// A finite task set with task probabilities and per-task Bernoulli means.
#[derive(Clone, Debug)]
pub struct TaskEnvironment<T> {
    task_probs: Vec<T>,
    task_means: Vec<T>,
    sampler: WeightedIndex<f64>,
}

impl<T: Scalar> TaskEnvironment<T> {
    pub fn new(task_probs: Vec<T>, task_means: Vec<T>) -> Result<Self> {
        if task_probs.is_empty() {
            return Err(Error::InvalidEnvironment("no tasks".into()));
        }
        if task_probs.len() != task_means.len() {
            return Err(Error::InvalidEnvironment(format!(
                "{} task probabilities but {} task means",
                task_probs.len(),
                task_means.len()
            )));
        }
        if task_probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidEnvironment(
                "task probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: T = task_probs.iter().copied().sum();
        if (total - T::one()).abs() > T::normalization_tolerance() {
            return Err(Error::InvalidEnvironment(format!(
                "task probabilities sum to {total}, not 1"
            )));
        }
        if task_means
            .iter()
            .any(|mu| !mu.is_finite() || *mu < T::zero() || *mu > T::one())
        {
            return Err(Error::InvalidEnvironment(
                "task means must lie in [0, 1]".into(),
            ));
        }
        let sampler = WeightedIndex::new(task_probs.iter().map(|p| p.as_f64()))
            .map_err(|e| Error::InvalidEnvironment(e.to_string()))?;
        Ok(Self {
            task_probs,
            task_means,
            sampler,
        })
    }

    /// Environment whose task means are the evenly spaced grid
    /// `i / (|T| + 1)`, `i = 1..=|T|`.
    pub fn with_grid_means(task_probs: Vec<T>) -> Result<Self> {
        let count = task_probs.len();
        let means = default_task_means(count);
        Self::new(task_probs, means)
    }

    /// The ten-task reference environment with grid means.
    pub fn reference() -> Self {
        Self::with_grid_means(REFERENCE_TASK_PROBS.iter().map(|&p| T::lit(p)).collect())
            .expect("reference environment is valid")
    }

    /// Single task with mean `mu`.
    pub fn single_task(mu: T) -> Result<Self> {
        Self::new(vec![T::one()], vec![mu])
    }

    pub fn task_count(&self) -> usize {
        self.task_probs.len()
    }

    pub fn task_probs(&self) -> &[T] {
        &self.task_probs
    }

    pub fn task_means(&self) -> &[T] {
        &self.task_means
    }

    pub fn task_mean(&self, task: TaskId) -> Result<T> {
        self.task_means
            .get(task.0)
            .copied()
            .ok_or(Error::TaskOutOfRange {
                task: task.0,
                count: self.task_count(),
            })
    }

    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> TaskId {
        TaskId(self.sampler.sample(rng))
    }

    /// `m` i.i.d. Bernoulli draws with the task's mean.
    pub fn sample_dataset<R: Rng + ?Sized>(
        &self,
        task: TaskId,
        m: usize,
        rng: &mut R,
    ) -> Result<Dataset> {
        if m == 0 {
            return Err(Error::InvalidParameter("dataset size must be ≥ 1".into()));
        }
        let mu = self.task_mean(task)?.as_f64().clamp(0.0, 1.0);
        let samples = (0..m).map(|_| u8::from(rng.gen_bool(mu))).collect();
        Ok(Dataset { samples })
    }

    /// `(Σ pμ, Σ p(μ − μ̄)², Σ pμ(1 − μ))`.
    pub fn moments(&self) -> EnvironmentMoments<T> {
        let mean_of_means: T = self
            .task_probs
            .iter()
            .zip(&self.task_means)
            .map(|(&p, &mu)| p * mu)
            .sum();
        let var_of_means = self
            .task_probs
            .iter()
            .zip(&self.task_means)
            .map(|(&p, &mu)| p * (mu - mean_of_means) * (mu - mean_of_means))
            .sum();
        let mean_bernoulli_var = self
            .task_probs
            .iter()
            .zip(&self.task_means)
            .map(|(&p, &mu)| p * mu * (T::one() - mu))
            .sum();
        EnvironmentMoments {
            mean_of_means,
            var_of_means,
            mean_bernoulli_var,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvironmentMoments<T> {
    pub mean_of_means: T,
    pub var_of_means: T,
    pub mean_bernoulli_var: T,
}

pub fn default_task_means<T: Scalar>(count: usize) -> Vec<T> {
    (1..=count)
        .map(|i| T::of_usize(i) / T::of_usize(count + 1))
        .collect()
}
