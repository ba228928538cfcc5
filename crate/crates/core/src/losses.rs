//! Loss and gap functionals for the squared loss on binary data.
//!
//! The reference learners are deterministic, so expectations over the
//! base-learner's output collapse to a single evaluation of
//! [`base_learn`].

use crate::environment::{Dataset, TaskEnvironment};
use crate::error::{Error, Result};
use crate::learners::{base_learn, BaseLearnerConfig, Hyperparameter, MetaLearner};
use crate::mc::{run_trials, Estimate};
use crate::scalar::Scalar;
use crate::stream::RandomStream;
use crate::supersample::{meta_training_set, select_samples, MetaSupersample, Selection};

/// Range `[a, b]` of the loss function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBounds<T> {
    a: T,
    b: T,
}

impl<T: Scalar> LossBounds<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a >= T::zero() && a < b) {
            return Err(Error::InvalidParameter(format!(
                "loss bounds need 0 ≤ a < b < ∞, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    /// `[0, 1]`, the range of the squared loss on `[0,1] × {0,1}`.
    pub fn unit() -> Self {
        Self {
            a: T::zero(),
            b: T::one(),
        }
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn width(&self) -> T {
        self.b - self.a
    }
}

#[inline]
pub fn loss<T: Scalar>(w: T, z: u8) -> T {
    let d = w - T::of_usize(z as usize);
    d * d
}

/// Mean per-sample loss on `dataset`.
pub fn training_loss<T: Scalar>(w: T, dataset: &Dataset) -> Result<T> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // Only two sample values exist, so count them instead of summing.
    let ones = dataset.count_ones();
    let zeros = dataset.len() - ones;
    Ok(
        (T::of_usize(ones) * loss(w, 1) + T::of_usize(zeros) * loss(w, 0))
            / T::of_usize(dataset.len()),
    )
}

/// `E[(w − Z)²]` for `Z ~ Bernoulli(mu)`.
pub fn per_task_generalization_loss<T: Scalar>(w: T, mu: T) -> T {
    (w - mu) * (w - mu) + mu * (T::one() - mu)
}

/// Training loss of the base-learner's output on the data it was trained on.
pub fn avg_per_task_training_loss<T: Scalar>(
    u: Hyperparameter<T>,
    dataset: &Dataset,
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    let w = base_learn(cfg, dataset, u)?;
    training_loss(w, dataset)
}

pub fn meta_training_loss<T: Scalar>(
    u: Hyperparameter<T>,
    meta_training: &[Dataset],
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    if meta_training.is_empty() {
        return Err(Error::EmptyInput("meta-training set"));
    }
    let mut total = T::zero();
    for dataset in meta_training {
        total = total + avg_per_task_training_loss(u, dataset, cfg)?;
    }
    Ok(total / T::of_usize(meta_training.len()))
}

/// Exact meta-generalization loss of `u`:
/// `Σ_τ p_τ[(1−α)²(u−μ_τ)² + α²μ_τ(1−μ_τ)/M + μ_τ(1−μ_τ)]`.
pub fn meta_generalization_loss_exact<T: Scalar>(
    u: Hyperparameter<T>,
    env: &TaskEnvironment<T>,
    m: usize,
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be ≥ 1".into()));
    }
    let alpha = cfg.alpha();
    let shrink = (T::one() - alpha) * (T::one() - alpha);
    let m = T::of_usize(m);
    Ok(env
        .task_probs()
        .iter()
        .zip(env.task_means())
        .map(|(&p, &mu)| {
            let v = mu * (T::one() - mu);
            let bias = u.value() - mu;
            p * (shrink * bias * bias + alpha * alpha * v / m + v)
        })
        .sum())
}

/// `L(test half) − L(train half)` of `w` on the row slot `slot` picks with
/// environment bit `r_i`, split by `s_i`.
pub fn within_task_gap_hat<T: Scalar>(
    w: T,
    ss: &MetaSupersample,
    r_i: u8,
    s_i: &[u8],
    slot: usize,
) -> Result<T> {
    if slot >= ss.n() || s_i.len() != ss.m() || r_i > 1 {
        return Err(Error::ShapeMismatch(format!(
            "slot {slot}, r_i {r_i}, {} sample bits for N={}, M={}",
            s_i.len(),
            ss.n(),
            ss.m()
        )));
    }
    let row = ss.slot_row(slot, r_i);
    let complement: Vec<u8> = s_i.iter().map(|b| 1 - b).collect();
    let test = select_samples(row, &complement)?;
    let train = select_samples(row, s_i)?;
    Ok(training_loss(w, &test)? - training_loss(w, &train)?)
}

/// Meta-training loss of `u` on the complement-selected data minus that on
/// the selected data.
pub fn env_level_gap_tilde<T: Scalar>(
    u: Hyperparameter<T>,
    ss: &MetaSupersample,
    sel: &Selection,
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    let train = meta_training_set(ss, sel)?;
    let test = meta_training_set(ss, &sel.complement())?;
    Ok(meta_training_loss(u, &test, cfg)? - meta_training_loss(u, &train, cfg)?)
}

/// Draws `n` tasks and an `m`-sample dataset for each.
pub fn sample_meta_training<T: Scalar>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    rng: &mut RandomStream,
) -> Result<Vec<Dataset>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be ≥ 1".into()));
    }
    (0..n)
        .map(|_| {
            let task = env.sample_task(rng);
            env.sample_dataset(task, m, rng)
        })
        .collect()
}

/// Monte-Carlo estimate of the average meta-generalization gap
/// `E[L(U) − L_train(U)]`, using the exact `L(u)` and the reference
/// base-learner. Trial `t` uses `stream.substream(t)`.
pub fn true_avg_meta_gap_mc<T, L>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<T>,
    meta_learner: &L,
    trials: usize,
    stream: &RandomStream,
) -> Result<Estimate<T>>
where
    T: Scalar,
    L: MetaLearner<T> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let gaps = run_trials(stream, trials, |_, rng| -> Result<T> {
        let data = sample_meta_training(env, n, m, rng)?;
        let u = Hyperparameter::new(meta_learner.learn(&data, rng)?)?;
        Ok(meta_generalization_loss_exact(u, env, m, cfg)? - meta_training_loss(u, &data, cfg)?)
    });
    let gaps: Vec<T> = gaps.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&gaps))
}

/// Monte-Carlo estimate of `E[L(U)]` for a meta-learner: draw the
/// meta-training set, learn `U`, evaluate the exact meta-generalization loss.
pub fn expected_meta_loss_mc<T, L>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<T>,
    meta_learner: &L,
    trials: usize,
    stream: &RandomStream,
) -> Result<Estimate<T>>
where
    T: Scalar,
    L: MetaLearner<T> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let values = run_trials(stream, trials, |_, rng| -> Result<T> {
        let data = sample_meta_training(env, n, m, rng)?;
        let u = Hyperparameter::new(meta_learner.learn(&data, rng)?)?;
        meta_generalization_loss_exact(u, env, m, cfg)
    });
    let values: Vec<T> = values.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&values))
}
