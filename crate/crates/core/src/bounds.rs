//! The two conditional-mutual-information terms of the meta-learning
//! generalization bound, computed exactly per meta-supersample for the
//! reference learners, estimated by Monte Carlo over supersamples, and
//! assembled into the bound.
//!
//! The meta-learner output `U` is a deterministic function of the
//! supersample and the selection, so `I(U; R, S | Z̃ = z̃) = H(U | Z̃ = z̃)`:
//! the law of `U` given `z̃` is the convolution of the per-slot laws of the
//! selected sample means, scaled by `1/N`.
//!
//! For the within-task term of slot `i`, the base-learner is trained on the
//! row the environment bit does *not* pick (`r̄_i`) with split `S_i`, while
//! `U` is trained on row `r_i` with the same `S_i` plus the other slots:
//!
//! ```text
//! W = α·D_i(r̄_i, S_i) + (1 − α)·U,   U = (1/N)[D_i(r_i, S_i) + Σ_{k≠i} D_k(R_k, S_k)]
//! ```
//!
//! Given `(z̃, r_i, s_i)` the slot-`i` parts are fixed and the rest is the
//! convolution over the other slots, which gives one law of `W` per value of
//! `s_i`.

use num_rational::Ratio;

use crate::environment::TaskEnvironment;
use crate::error::{Error, Result};
use crate::findist::{convolve_scaled, ConditionalTable, FiniteDistribution};
use crate::learners::BaseLearnerConfig;
use crate::losses::LossBounds;
use crate::mc::{run_trials, Estimate};
use crate::scalar::Scalar;
use crate::stream::RandomStream;
use crate::supersample::{
    build_meta_supersample, selected_ones_packed, MetaSupersample, Selection,
};

/// Largest denominator tried when expressing `α` as a fraction.
pub const MAX_ALPHA_DENOMINATOR: i64 = 1_000_000;

/// Largest per-task sample count whose `2^M` splits are enumerated.
pub const MAX_EXACT_M: usize = 20;

/// CMI inputs below this are treated as zero before taking square roots.
pub const CMI_ZERO_CLAMP: f64 = 1e-15;

/// Slack allowed when comparing a CMI value against its entropy cap.
pub const CAP_SLACK: f64 = 1e-9;

/// The reference learners on an exact rational grid: `α = p/q`.
#[derive(Clone, Copy, Debug)]
pub struct ExactModel<T> {
    cfg: BaseLearnerConfig<T>,
    alpha_num: i64,
    alpha_den: i64,
}

impl<T: Scalar> ExactModel<T> {
    /// Fails with [`Error::NonFiniteSupport`] when `α` has no exact fraction
    /// with denominator ≤ [`MAX_ALPHA_DENOMINATOR`]: the output law would
    /// not live on a bounded grid.
    pub fn new(cfg: &BaseLearnerConfig<T>) -> Result<Self> {
        let alpha = cfg.alpha().as_f64();
        let tol = 4.0 * T::epsilon().as_f64().max(f64::EPSILON);
        for q in 1..=MAX_ALPHA_DENOMINATOR {
            let p = (alpha * q as f64).round();
            if (p / q as f64 - alpha).abs() <= tol {
                return Ok(Self {
                    cfg: *cfg,
                    alpha_num: p as i64,
                    alpha_den: q,
                });
            }
        }
        Err(Error::NonFiniteSupport(format!(
            "alpha = {alpha} is not a fraction with denominator ≤ {MAX_ALPHA_DENOMINATOR}"
        )))
    }

    pub fn cfg(&self) -> &BaseLearnerConfig<T> {
        &self.cfg
    }

    pub fn alpha_ratio(&self) -> Ratio<i64> {
        Ratio::new(self.alpha_num, self.alpha_den)
    }
}

/// Exact per-supersample quantities shared by the CMI computations.
#[derive(Clone, Debug)]
pub struct SupersampleAnalysis<'a, T> {
    ss: &'a MetaSupersample,
    model: ExactModel<T>,
    /// `counts[slot][r][s_bits]`: ones selected from the row `(slot, r)`.
    counts: Vec<[Vec<i64>; 2]>,
    /// Law of the selected-ones count of each slot over uniform `(r, s)`.
    slot_laws: Vec<FiniteDistribution<T>>,
}

impl<'a, T: Scalar> SupersampleAnalysis<'a, T> {
    pub fn new(ss: &'a MetaSupersample, model: &ExactModel<T>) -> Result<Self> {
        let (n, m) = (ss.n(), ss.m());
        if m > MAX_EXACT_M {
            return Err(Error::InvalidParameter(format!(
                "exact enumeration supports M ≤ {MAX_EXACT_M}, got {m}"
            )));
        }
        let splits = 1u64 << m;
        let mut counts = Vec::with_capacity(n);
        let mut slot_laws = Vec::with_capacity(n);
        for slot in 0..n {
            let per_r: [Vec<i64>; 2] = [0u8, 1].map(|r| {
                (0..splits)
                    .map(|s| selected_ones_packed(ss.slot_row(slot, r), s, m) as i64)
                    .collect()
            });
            let all: Vec<i64> = per_r.iter().flatten().copied().collect();
            slot_laws.push(FiniteDistribution::uniform(&all, 1)?);
            counts.push(per_r);
        }
        Ok(Self {
            ss,
            model: *model,
            counts,
            slot_laws,
        })
    }

    pub fn supersample(&self) -> &MetaSupersample {
        self.ss
    }

    /// Law of `U` given the supersample, on the grid `1/(N·M)`.
    pub fn meta_output_law(&self) -> Result<FiniteDistribution<T>> {
        let m = self.ss.m() as i64;
        let means: Vec<FiniteDistribution<T>> = self
            .slot_laws
            .iter()
            .map(|law| law.affine(1, 0, m))
            .collect::<Result<_>>()?;
        convolve_scaled(&means, Ratio::new(1, self.ss.n() as i64))
    }

    /// `I(U; R, S_{1:N} | Z̃ = z̃) = H(U | Z̃ = z̃)` in nats.
    pub fn env_cmi(&self) -> Result<T> {
        Ok(self.meta_output_law()?.entropy())
    }

    /// Numerator of `U` (over `N·M`) for a full selection.
    pub fn meta_output_numerator(&self, sel: &Selection) -> i64 {
        (0..self.ss.n())
            .map(|k| self.counts[k][sel.r()[k] as usize][pack(&sel.s()[k])])
            .sum()
    }

    /// Law of the summed counts of every slot except `slot`.
    fn rest_law(&self, slot: usize) -> Result<FiniteDistribution<T>> {
        let others: Vec<FiniteDistribution<T>> = self
            .slot_laws
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != slot)
            .map(|(_, law)| law.clone())
            .collect();
        if others.is_empty() {
            return FiniteDistribution::point_mass(0, 1);
        }
        convolve_scaled(&others, Ratio::new(1, 1))
    }

    fn w_grid(&self) -> (i64, i64, i64) {
        let p = self.model.alpha_num;
        let q = self.model.alpha_den;
        let n = self.ss.n() as i64;
        let m = self.ss.m() as i64;
        // W·qNM = p·N·k_w + (q − p)·(k_train + K_rest)
        (p * n, q - p, q * n * m)
    }

    /// Joint law of `(S_i, W)` given `z̃` and `R_i = r_i`: one condition per
    /// split `s_i` (label = packed bits), uniform condition probabilities.
    pub fn task_table(&self, slot: usize, r_i: u8) -> Result<ConditionalTable<T>> {
        if slot >= self.ss.n() || r_i > 1 {
            return Err(Error::ShapeMismatch(format!(
                "slot {slot} / r_i {r_i} for N = {}",
                self.ss.n()
            )));
        }
        let rest = self.rest_law(slot)?;
        let (w_mult, u_mult, denom) = self.w_grid();
        let splits = 1usize << self.ss.m();
        let train = &self.counts[slot][r_i as usize];
        let base = &self.counts[slot][1 - r_i as usize];
        let laws = (0..splits)
            .map(|s| rest.affine(u_mult, w_mult * base[s] + u_mult * train[s], denom))
            .collect::<Result<Vec<_>>>()?;
        ConditionalTable::new(
            (0..splits as u64).collect(),
            vec![T::one() / T::of_usize(splits); splits],
            laws,
        )
    }

    /// `I(W; S_i | Z̃ = z̃, R_i = r_i)` in nats.
    pub fn task_cmi(&self, slot: usize, r_i: u8) -> Result<T> {
        Ok(self.task_table(slot, r_i)?.conditional_mi())
    }

    /// Numerator of `W` (over `qNM`) for slot `slot` under a full selection.
    pub fn base_output_numerator(&self, slot: usize, sel: &Selection) -> i64 {
        let (w_mult, u_mult, _) = self.w_grid();
        let r = sel.r()[slot] as usize;
        let s = pack(&sel.s()[slot]);
        w_mult * self.counts[slot][1 - r][s] + u_mult * self.meta_output_numerator(sel)
    }

    /// Grid denominator of [`Self::base_output_numerator`].
    pub fn base_output_denominator(&self) -> i64 {
        self.w_grid().2
    }
}

pub(crate) fn pack(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .map(|(j, &b)| (b as usize) << j)
        .sum()
}

pub fn env_cmi_exact_given_supersample<T: Scalar>(
    ss: &MetaSupersample,
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    SupersampleAnalysis::new(ss, &ExactModel::new(cfg)?)?.env_cmi()
}

/// `slot` is 0-based.
pub fn task_cmi_exact_given_supersample<T: Scalar>(
    ss: &MetaSupersample,
    slot: usize,
    r_i: u8,
    cfg: &BaseLearnerConfig<T>,
) -> Result<T> {
    SupersampleAnalysis::new(ss, &ExactModel::new(cfg)?)?.task_cmi(slot, r_i)
}

/// Monte-Carlo estimates of both CMI terms.
#[derive(Clone, Debug)]
pub struct CmiEstimate<T> {
    pub env_cmi: Estimate<T>,
    /// One estimate per task slot.
    pub task_cmi: Vec<Estimate<T>>,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_env_cmi: T,
    pub max_task_cmi: T,
    /// Per-trial values above their entropy caps (always expected to be 0).
    pub cap_violations: usize,
}

impl<T: Scalar> CmiEstimate<T> {
    pub fn mean_task_cmi(&self) -> T {
        self.task_cmi.iter().map(|e| e.mean).sum::<T>() / T::of_usize(self.task_cmi.len())
    }
}

/// `N(1 + M)·ln 2`, the entropy of the selection variables.
pub fn env_entropy_cap<T: Scalar>(n: usize, m: usize) -> T {
    T::of_usize(n * (m + 1)) * T::LN_2()
}

/// `M·ln 2`.
pub fn task_entropy_cap<T: Scalar>(m: usize) -> T {
    T::of_usize(m) * T::LN_2()
}

/// Averages the exact per-supersample CMI values over `trials` independent
/// meta-supersamples. The task term of each slot averages both values of
/// `r_i` exactly.
pub fn estimate_cmi_terms<T: Scalar>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<T>,
    trials: usize,
    stream: &RandomStream,
) -> Result<CmiEstimate<T>> {
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 trials are needed".into(),
        ));
    }
    let model = ExactModel::new(cfg)?;
    let env_cap = env_entropy_cap::<T>(n, m) + T::lit(CAP_SLACK);
    let task_cap = task_entropy_cap::<T>(m) + T::lit(CAP_SLACK);
    let per_trial = run_trials(stream, trials, |_, rng| -> Result<(T, Vec<T>, usize)> {
        let ss = build_meta_supersample(env, n, m, rng)?;
        let analysis = SupersampleAnalysis::new(&ss, &model)?;
        let env_cmi = analysis.env_cmi()?;
        let mut violations = usize::from(env_cmi > env_cap || env_cmi < T::zero());
        let mut tasks = Vec::with_capacity(n);
        for slot in 0..n {
            let a = analysis.task_cmi(slot, 0)?;
            let b = analysis.task_cmi(slot, 1)?;
            for v in [a, b] {
                violations += usize::from(v > task_cap || v < T::zero());
            }
            tasks.push((a + b) / T::lit(2.0));
        }
        Ok((env_cmi, tasks, violations))
    });
    let per_trial: Vec<(T, Vec<T>, usize)> = per_trial.into_iter().collect::<Result<_>>()?;

    let env_values: Vec<T> = per_trial.iter().map(|t| t.0).collect();
    let task_cmi = (0..n)
        .map(|slot| {
            let v: Vec<T> = per_trial.iter().map(|t| t.1[slot]).collect();
            Estimate::from_samples(&v)
        })
        .collect();
    let max_task_cmi = per_trial
        .iter()
        .flat_map(|t| t.1.iter().copied())
        .fold(T::zero(), T::max);
    Ok(CmiEstimate {
        env_cmi: Estimate::from_samples(&env_values),
        task_cmi,
        n,
        m,
        trials,
        seed: stream.root_seed(),
        max_env_cmi: env_values.iter().copied().fold(T::zero(), T::max),
        max_task_cmi,
        cap_violations: per_trial.iter().map(|t| t.2).sum(),
    })
}

/// Upper bound on the bound: `√(2(b−a)² ln 2)·(√(1+M) + 1)`.
pub fn cap_value<T: Scalar>(m: usize, loss_bounds: &LossBounds<T>) -> T {
    let w = loss_bounds.width();
    (T::lit(2.0) * w * w * T::LN_2()).sqrt() * (T::of_usize(1 + m).sqrt() + T::one())
}

/// `√(2(b−a)²·I/k)`: the minimum over `λ > 0` of
/// [`pre_optimization_bound`].
pub fn optimized_square_root_bound<T: Scalar>(info: T, k: usize, width: T) -> Result<T> {
    let info = clamp_information(info)?;
    Ok((T::lit(2.0) * width * width * info / T::of_usize(k)).sqrt())
}

/// `λ(b−a)²/(2k) + I/λ`, the bound implied by the exponential inequality
/// for a fixed `λ > 0` before optimizing.
pub fn pre_optimization_bound<T: Scalar>(lambda: T, info: T, k: usize, width: T) -> T {
    lambda * width * width / (T::lit(2.0) * T::of_usize(k)) + info / lambda
}

/// The optimizing `λ* = √(2kI)/(b−a)`.
pub fn optimal_lambda<T: Scalar>(info: T, k: usize, width: T) -> T {
    (T::lit(2.0) * T::of_usize(k) * info).sqrt() / width
}

fn clamp_information<T: Scalar>(info: T) -> Result<T> {
    if info.is_nan() || info < -T::lit(1e-12) {
        return Err(Error::NegativeInformation(info.as_f64()));
    }
    Ok(if info < T::lit(CMI_ZERO_CLAMP) {
        T::zero()
    } else {
        info
    })
}

/// Point evaluation of the bound from CMI values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundTerms<T> {
    pub env_term: T,
    pub task_term: T,
    pub bound_value: T,
    pub cap_value: T,
}

pub fn bound_from_cmi<T: Scalar>(
    env_cmi: T,
    task_cmi: &[T],
    n: usize,
    m: usize,
    loss_bounds: &LossBounds<T>,
) -> Result<BoundTerms<T>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("N and M must be ≥ 1".into()));
    }
    if task_cmi.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} task terms for N = {n}",
            task_cmi.len()
        )));
    }
    let w = loss_bounds.width();
    let env_term = optimized_square_root_bound(env_cmi, n, w)?;
    let mut task_sum = T::zero();
    for &info in task_cmi {
        task_sum = task_sum + optimized_square_root_bound(info, m, w)?;
    }
    let task_term = task_sum / T::of_usize(n);
    Ok(BoundTerms {
        env_term,
        task_term,
        bound_value: env_term + task_term,
        cap_value: cap_value(m, loss_bounds),
    })
}

/// The single-task (conventional learning) form `√(2(b−a)²·I(W;S|Z̃)/M)`.
pub fn conventional_cmi_bound<T: Scalar>(
    task_cmi: T,
    m: usize,
    loss_bounds: &LossBounds<T>,
) -> Result<T> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be ≥ 1".into()));
    }
    optimized_square_root_bound(task_cmi, m, loss_bounds.width())
}

#[derive(Clone, Debug)]
pub struct BoundReport<T> {
    pub env_cmi: Estimate<T>,
    pub task_cmi: Vec<Estimate<T>>,
    pub env_term: T,
    pub env_term_stderr: T,
    pub task_term: T,
    pub task_term_stderr: T,
    pub bound_value: T,
    pub bound_stderr: T,
    pub cap_value: T,
    /// Per-trial CMI values above their entropy caps.
    pub cap_violations: usize,
    pub n: usize,
    pub m: usize,
    pub a: T,
    pub b: T,
    pub trials: usize,
    pub seed: u64,
}

/// Delta-method standard error of `√(κ·x)` (zero as `x → 0`).
fn sqrt_term_stderr<T: Scalar>(kappa: T, x: T, se: T) -> T {
    if x < T::lit(CMI_ZERO_CLAMP) {
        T::zero()
    } else {
        kappa.sqrt() * se / (T::lit(2.0) * x.sqrt())
    }
}

/// Assembles the bound from estimated CMI terms. Standard errors of the
/// per-slot square roots are summed (treating slots as perfectly
/// correlated), as are the environment and task contributions.
pub fn assemble_bound<T: Scalar>(
    terms: &CmiEstimate<T>,
    n: usize,
    m: usize,
    loss_bounds: &LossBounds<T>,
) -> Result<BoundReport<T>> {
    if terms.n != n || terms.m != m {
        return Err(Error::ShapeMismatch(format!(
            "estimate is for N={}, M={} but N={n}, M={m} was requested",
            terms.n, terms.m
        )));
    }
    let task_means: Vec<T> = terms.task_cmi.iter().map(|e| e.mean).collect();
    let point = bound_from_cmi(terms.env_cmi.mean, &task_means, n, m, loss_bounds)?;
    let w = loss_bounds.width();
    let two_w2 = T::lit(2.0) * w * w;
    let env_term_stderr = sqrt_term_stderr(
        two_w2 / T::of_usize(n),
        terms.env_cmi.mean,
        terms.env_cmi.stderr,
    );
    let task_term_stderr = terms
        .task_cmi
        .iter()
        .map(|e| sqrt_term_stderr(two_w2 / T::of_usize(m), e.mean, e.stderr))
        .sum::<T>()
        / T::of_usize(n);
    Ok(BoundReport {
        env_cmi: terms.env_cmi,
        task_cmi: terms.task_cmi.clone(),
        env_term: point.env_term,
        env_term_stderr,
        task_term: point.task_term,
        task_term_stderr,
        bound_value: point.bound_value,
        bound_stderr: env_term_stderr + task_term_stderr,
        cap_value: point.cap_value,
        cap_violations: terms.cap_violations,
        n,
        m,
        a: loss_bounds.a(),
        b: loss_bounds.b(),
        trials: terms.trials,
        seed: terms.seed,
    })
}

/// Estimates both CMI terms and assembles the bound.
pub fn compute_bound<T: Scalar>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<T>,
    loss_bounds: &LossBounds<T>,
    trials: usize,
    stream: &RandomStream,
) -> Result<BoundReport<T>> {
    let terms = estimate_cmi_terms(env, n, m, cfg, trials, stream)?;
    assemble_bound(&terms, n, m, loss_bounds)
}

/// A generalization bound that can be evaluated on an environment, for
/// comparing against other bounds on the same instance.
pub trait BoundPlugin<T> {
    fn name(&self) -> &str;

    fn compute(
        &self,
        env: &TaskEnvironment<T>,
        n: usize,
        m: usize,
        cfg: &BaseLearnerConfig<T>,
        trials: usize,
        stream: &RandomStream,
    ) -> Result<Estimate<T>>;
}

#[derive(Clone, Copy, Debug)]
pub struct CmiBound<T> {
    pub loss_bounds: LossBounds<T>,
}

impl<T: Scalar> BoundPlugin<T> for CmiBound<T> {
    fn name(&self) -> &str {
        "cmi"
    }

    fn compute(
        &self,
        env: &TaskEnvironment<T>,
        n: usize,
        m: usize,
        cfg: &BaseLearnerConfig<T>,
        trials: usize,
        stream: &RandomStream,
    ) -> Result<Estimate<T>> {
        let report = compute_bound(env, n, m, cfg, &self.loss_bounds, trials, stream)?;
        Ok(Estimate {
            mean: report.bound_value,
            stderr: report.bound_stderr,
            trials,
        })
    }
}
