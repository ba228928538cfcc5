//! Numerical certification of the exponential inequalities, the gap
//! decomposition, the zero-mean/boundedness premises and the λ optimization
//! behind the bound.
//!
//! One-sided checks pass when `statistic ≤ threshold + 3·stderr`. Identity
//! checks store their tolerance in `threshold` and pass when
//! `statistic ≤ threshold`.

pub mod oracle;

use std::fmt;

use rayon::prelude::*;

use crate::bounds::{
    assemble_bound, estimate_cmi_terms, optimal_lambda, optimized_square_root_bound, pack,
    pre_optimization_bound, ExactModel, SupersampleAnalysis,
};
use crate::environment::TaskEnvironment;
use crate::error::{Error, Result};
use crate::experiments::expected_meta_loss_closed_form;
use crate::findist::{ConditionalTable, FiniteDistribution};
use crate::learners::{base_learn, meta_learn, BaseLearnerConfig, GrandMean, Hyperparameter};
use crate::losses::{
    env_level_gap_tilde, expected_meta_loss_mc, meta_generalization_loss_exact, meta_training_loss,
    true_avg_meta_gap_mc, within_task_gap_hat, LossBounds,
};
use crate::mc::{run_trials, Estimate};
use crate::scalar::pairwise_sum;
use crate::stream::RandomStream;
use crate::supersample::{
    build_meta_supersample, meta_training_set, sample_selection, slot_dataset, MetaSupersample,
    Selection,
};

/// Absolute tolerance for identities evaluated by exact enumeration.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Tolerance for the enumerated zero-mean, range and MGF premises.
pub const PREMISE_TOLERANCE: f64 = 1e-14;

/// Standard errors of slack in one-sided Monte-Carlo checks.
pub const STDERR_SLACK: f64 = 3.0;

/// Points of the log-spaced λ grid in `[1e−3, 1e3]`.
pub const LAMBDA_GRID_POINTS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub stderr: f64,
    pub passed: bool,
    pub trials: usize,
    pub seed: u64,
}

impl CheckResult {
    pub fn one_sided(
        name: impl Into<String>,
        statistic: f64,
        threshold: f64,
        stderr: f64,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            stderr,
            passed: statistic <= threshold + STDERR_SLACK * stderr,
            trials,
            seed,
        }
    }

    pub fn identity(
        name: impl Into<String>,
        statistic: f64,
        tolerance: f64,
        stderr: f64,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold: tolerance,
            stderr,
            passed: statistic.abs() <= tolerance,
            trials,
            seed,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<48} stat={:<13.6e} thr={:<11.4e} se={:<11.4e} trials={:<7} seed={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.threshold,
            self.stderr,
            self.trials,
            self.seed
        )
    }
}

/// Per-trial draws for the task-level exponential inequality: one
/// `(Δ̂, ı)` pair per slot plus the exact `E[exp(−ı)]` given `(z̃, r_i)`.
struct TaskExponentDraw {
    gaps: Vec<f64>,
    densities: Vec<f64>,
    support_mass: Vec<f64>,
}

fn draw_task_exponents(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    model: &ExactModel<f64>,
    rng: &mut RandomStream,
) -> Result<TaskExponentDraw> {
    let ss = build_meta_supersample(env, n, m, rng)?;
    let sel = sample_selection(n, m, rng)?;
    let analysis = SupersampleAnalysis::new(&ss, model)?;
    let denom = analysis.base_output_denominator() as f64;
    let mut draw = TaskExponentDraw {
        gaps: Vec::with_capacity(n),
        densities: Vec::with_capacity(n),
        support_mass: Vec::with_capacity(n),
    };
    for slot in 0..n {
        let r_i = sel.r()[slot];
        let s_i = &sel.s()[slot];
        let table = analysis.task_table(slot, r_i)?;
        let w_num = analysis.base_output_numerator(slot, &sel);
        let density = table
            .information_density(pack(s_i), w_num)
            .map_err(|_| Error::OutsideSupport)?;
        // The base-learner trains on row r̄_i, so the gap is measured there.
        let gap = within_task_gap_hat(w_num as f64 / denom, &ss, 1 - r_i, s_i, slot)?;
        let marginal = table.marginal();
        let mass: f64 = table
            .laws()
            .iter()
            .zip(table.cond_probs())
            .map(|(law, &pc)| {
                let factor = marginal.denom() / law.denom();
                pc * law
                    .atoms()
                    .iter()
                    .map(|&a| marginal.prob_of(a * factor))
                    .sum::<f64>()
            })
            .sum();
        draw.gaps.push(gap);
        draw.densities.push(density);
        draw.support_mass.push(mass);
    }
    Ok(draw)
}

fn exponent_estimate(gaps: &[f64], densities: &[f64], lambda: f64, variance_proxy: f64) -> f64 {
    let values: Vec<f64> = gaps
        .iter()
        .zip(densities)
        .map(|(&g, &i)| (lambda * g - lambda * lambda * variance_proxy / 2.0 - i).exp())
        .collect();
    pairwise_sum(&values) / values.len() as f64
}

/// `E[exp(λΔ̂ − λ²(b−a)²/(2M) − ı(W; S_i | Z̃, R_i))] ≤ 1` for each λ.
/// Each trial averages the exponential over all task slots.
///
/// The last result compares the λ = 0 statistic with the exact value of
/// `E[exp(−ı)]` given each drawn `(z̃, r_i)` (the conditional support mass,
/// equal to 1 for full-support channels), using the paired difference.
pub fn check_exponential_inequality_task_multi(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    lambdas: &[f64],
    trials: usize,
    stream: &RandomStream,
) -> Result<Vec<CheckResult>> {
    check_trials(trials)?;
    let model = ExactModel::new(cfg)?;
    let loss_bounds = LossBounds::<f64>::unit();
    let width = loss_bounds.width();
    let draws = run_trials(stream, trials, |_, rng| {
        draw_task_exponents(env, n, m, &model, rng)
    });
    let draws: Vec<TaskExponentDraw> = draws.into_iter().collect::<Result<_>>()?;
    let seed = stream.root_seed();
    let proxy = width * width / m as f64;

    let mut results = Vec::with_capacity(lambdas.len() + 1);
    for &lambda in lambdas {
        check_lambda(lambda)?;
        let per_trial: Vec<f64> = draws
            .iter()
            .map(|d| exponent_estimate(&d.gaps, &d.densities, lambda, proxy))
            .collect();
        let e = Estimate::from_samples(&per_trial);
        results.push(CheckResult::one_sided(
            format!("task exponential inequality N={n} M={m} λ={lambda}"),
            e.mean,
            1.0,
            e.stderr,
            trials,
            seed,
        ));
    }
    let paired: Vec<f64> = draws
        .iter()
        .map(|d| {
            let mc = exponent_estimate(&d.gaps, &d.densities, 0.0, proxy);
            let exact = d.support_mass.iter().sum::<f64>() / d.support_mass.len() as f64;
            mc - exact
        })
        .collect();
    let e = Estimate::from_samples(&paired);
    results.push(CheckResult::identity(
        format!("task change of measure at λ=0 N={n} M={m}"),
        e.mean.abs(),
        STDERR_SLACK * e.stderr + IDENTITY_TOLERANCE,
        e.stderr,
        trials,
        seed,
    ));
    Ok(results)
}

pub fn check_exponential_inequality_task(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    lambda: f64,
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    let mut results =
        check_exponential_inequality_task_multi(env, n, m, cfg, &[lambda], trials, stream)?;
    Ok(results.swap_remove(0))
}

struct EnvExponentDraw {
    gap: f64,
    density: f64,
    /// `Σ_u P(u | z̃)²`, the exact `E[exp(−ı)]` given `z̃`.
    support_mass: f64,
}

fn draw_env_exponent(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    model: &ExactModel<f64>,
    rng: &mut RandomStream,
) -> Result<EnvExponentDraw> {
    let ss = build_meta_supersample(env, n, m, rng)?;
    let sel = sample_selection(n, m, rng)?;
    let analysis = SupersampleAnalysis::new(&ss, model)?;
    let law = analysis.meta_output_law()?;
    let u_num = analysis.meta_output_numerator(&sel);
    let p = law.prob_of(u_num);
    if p <= 0.0 {
        return Err(Error::OutsideSupport);
    }
    let u = Hyperparameter::new(u_num as f64 / law.denom() as f64)?;
    Ok(EnvExponentDraw {
        gap: env_level_gap_tilde(u, &ss, &sel, model.cfg())?,
        density: -p.ln(),
        support_mass: law.probs().iter().map(|q| q * q).sum(),
    })
}

/// `E[exp(λΔ̃ − λ²(b−a)²/(2N) − ı(U; R, S | Z̃))] ≤ 1` for each λ, where
/// `ı = −ln P(U | Z̃)` because `U` is a deterministic function of the
/// selection. The last result is the paired λ = 0 change-of-measure check.
pub fn check_exponential_inequality_env_multi(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    lambdas: &[f64],
    trials: usize,
    stream: &RandomStream,
) -> Result<Vec<CheckResult>> {
    check_trials(trials)?;
    let model = ExactModel::new(cfg)?;
    let width = LossBounds::<f64>::unit().width();
    let draws = run_trials(stream, trials, |_, rng| {
        draw_env_exponent(env, n, m, &model, rng)
    });
    let draws: Vec<EnvExponentDraw> = draws.into_iter().collect::<Result<_>>()?;
    let seed = stream.root_seed();
    let proxy = width * width / n as f64;

    let mut results = Vec::with_capacity(lambdas.len() + 1);
    for &lambda in lambdas {
        check_lambda(lambda)?;
        let per_trial: Vec<f64> = draws
            .iter()
            .map(|d| (lambda * d.gap - lambda * lambda * proxy / 2.0 - d.density).exp())
            .collect();
        let e = Estimate::from_samples(&per_trial);
        results.push(CheckResult::one_sided(
            format!("env exponential inequality N={n} M={m} λ={lambda}"),
            e.mean,
            1.0,
            e.stderr,
            trials,
            seed,
        ));
    }
    let paired: Vec<f64> = draws
        .iter()
        .map(|d| (-d.density).exp() - d.support_mass)
        .collect();
    let e = Estimate::from_samples(&paired);
    results.push(CheckResult::identity(
        format!("env change of measure at λ=0 N={n} M={m}"),
        e.mean.abs(),
        STDERR_SLACK * e.stderr + IDENTITY_TOLERANCE,
        e.stderr,
        trials,
        seed,
    ));
    Ok(results)
}

pub fn check_exponential_inequality_env(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    lambda: f64,
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    let mut results =
        check_exponential_inequality_env_multi(env, n, m, cfg, &[lambda], trials, stream)?;
    Ok(results.swap_remove(0))
}

/// Within-task and environment-level gap variables for one supersample and
/// selection: `(mean_i Δ̂_i, Δ̃)`, with `W_i` trained on row `r̄_i`.
pub fn supersample_gap_terms(
    ss: &MetaSupersample,
    sel: &Selection,
    cfg: &BaseLearnerConfig<f64>,
) -> Result<(f64, f64)> {
    let u: Hyperparameter<f64> = meta_learn(&meta_training_set(ss, sel)?)?;
    let mut within = 0.0;
    for slot in 0..ss.n() {
        let r_bar = 1 - sel.r()[slot];
        let s_i = &sel.s()[slot];
        let w = base_learn(cfg, &slot_dataset(ss, slot, r_bar, s_i)?, u)?;
        within += within_task_gap_hat(w, ss, r_bar, s_i, slot)?;
    }
    Ok((
        within / ss.n() as f64,
        env_level_gap_tilde(u, ss, sel, cfg)?,
    ))
}

/// Monte-Carlo check of the decomposition: the true gap (left side) and the
/// sum of the supersample-form within-task and environment-level terms
/// (right side) are estimated from independent substreams and must agree
/// within `3·(combined stderr)`.
pub fn check_decomposition(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    check_trials(trials)?;
    let lhs = true_avg_meta_gap_mc(env, n, m, cfg, &GrandMean, trials, &stream.substream(0))?;
    let rhs = run_trials(&stream.substream(1), trials, |_, rng| -> Result<f64> {
        let ss = build_meta_supersample(env, n, m, rng)?;
        let sel = sample_selection(n, m, rng)?;
        let (within, env_level) = supersample_gap_terms(&ss, &sel, cfg)?;
        Ok(within + env_level)
    });
    let rhs: Vec<f64> = rhs.into_iter().collect::<Result<_>>()?;
    let rhs = Estimate::from_samples(&rhs);
    let se = lhs.combined_stderr(&rhs);
    Ok(CheckResult::identity(
        format!("decomposition (MC) N={n} M={m}"),
        (lhs.mean - rhs.mean).abs(),
        STDERR_SLACK * se,
        se,
        trials,
        stream.root_seed(),
    ))
}

/// Both sides of the decomposition computed exactly by enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactDecomposition {
    pub true_gap: f64,
    pub within_task: f64,
    pub env_level: f64,
}

/// Probability of each binary row of length `len` under the environment's
/// mixture over tasks (row content does not depend on which task slot it is).
fn row_content_probs(env: &TaskEnvironment<f64>, len: usize) -> Vec<f64> {
    (0..1u64 << len)
        .map(|bits| {
            let ones = bits.count_ones() as i32;
            env.task_probs()
                .iter()
                .zip(env.task_means())
                .map(|(&p, &mu)| p * mu.powi(ones) * (1.0 - mu).powi(len as i32 - ones))
                .sum()
        })
        .collect()
}

fn row_from_bits(bits: u64, len: usize) -> Vec<u8> {
    (0..len).map(|j| ((bits >> j) & 1) as u8).collect()
}

/// Largest `2N·2M` for which [`decomposition_exact`] enumerates all
/// supersamples.
pub const MAX_EXACT_SUPERSAMPLE_BITS: usize = 20;

/// Exact left and right sides of the decomposition: the true average gap
/// by enumerating all meta-training sets, and the two supersample-form terms
/// by enumerating every binary meta-supersample and every selection.
pub fn decomposition_exact(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
) -> Result<ExactDecomposition> {
    let cells = 4 * n * m;
    if cells > MAX_EXACT_SUPERSAMPLE_BITS || n * (m + 1) > oracle::MAX_ORACLE_BITS {
        return Err(Error::InvalidParameter(format!(
            "exact decomposition needs 4NM ≤ {MAX_EXACT_SUPERSAMPLE_BITS}, got {cells}"
        )));
    }

    // Left side: Σ over meta-training sets of P(data)·(L(U) − L_train(U)).
    let dataset_probs = row_content_probs(env, m);
    let mut true_gap = 0.0;
    for code in 0..1u64 << (n * m) {
        let mut prob = 1.0;
        let mut data = Vec::with_capacity(n);
        for i in 0..n {
            let bits = (code >> (i * m)) & ((1 << m) - 1);
            prob *= dataset_probs[bits as usize];
            data.push(crate::environment::Dataset::new(row_from_bits(bits, m))?);
        }
        if prob == 0.0 {
            continue;
        }
        let u = meta_learn(&data)?;
        true_gap += prob
            * (meta_generalization_loss_exact(u, env, m, cfg)?
                - meta_training_loss(u, &data, cfg)?);
    }

    // Right side: Σ over supersamples of P(z̃)·E_sel[terms].
    let row_probs = row_content_probs(env, 2 * m);
    let row_mask = (1u64 << (2 * m)) - 1;
    let selections: Vec<Selection> = Selection::enumerate(n, m)?.collect();
    let per_ss: Vec<Result<(f64, f64)>> = (0..1u64 << cells)
        .into_par_iter()
        .map(|code| {
            let mut prob = 1.0;
            let mut rows = Vec::with_capacity(2 * n);
            for k in 0..2 * n {
                let bits = (code >> (k * 2 * m)) & row_mask;
                prob *= row_probs[bits as usize];
                rows.push(row_from_bits(bits, 2 * m));
            }
            if prob == 0.0 {
                return Ok((0.0, 0.0));
            }
            let ss = MetaSupersample::from_binary_rows(rows)?;
            let (mut within, mut env_level) = (0.0, 0.0);
            for sel in &selections {
                let (a, b) = supersample_gap_terms(&ss, sel, cfg)?;
                within += a;
                env_level += b;
            }
            let count = selections.len() as f64;
            Ok((prob * within / count, prob * env_level / count))
        })
        .collect();
    let per_ss: Vec<(f64, f64)> = per_ss.into_iter().collect::<Result<_>>()?;
    let within: Vec<f64> = per_ss.iter().map(|t| t.0).collect();
    let env_level: Vec<f64> = per_ss.iter().map(|t| t.1).collect();
    Ok(ExactDecomposition {
        true_gap,
        within_task: pairwise_sum(&within),
        env_level: pairwise_sum(&env_level),
    })
}

pub fn check_decomposition_exact(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
) -> Result<CheckResult> {
    let d = decomposition_exact(env, n, m, cfg)?;
    Ok(CheckResult::identity(
        format!("decomposition (exact) N={n} M={m}"),
        (d.true_gap - d.within_task - d.env_level).abs(),
        IDENTITY_TOLERANCE,
        0.0,
        0,
        0,
    ))
}

/// A fixed `(w, u, z̃, slot, r_i)` at which the selection-averaged premises
/// of the exponential inequalities are enumerated.
#[derive(Clone, Debug)]
pub struct PremiseInstance {
    pub supersample: MetaSupersample,
    pub w: f64,
    pub u: f64,
    pub slot: usize,
    pub r_i: u8,
}

pub fn random_premise_instances(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    count: usize,
    stream: &RandomStream,
) -> Result<Vec<PremiseInstance>> {
    use rand::Rng;
    run_trials(stream, count, |_, rng| -> Result<PremiseInstance> {
        Ok(PremiseInstance {
            supersample: build_meta_supersample(env, n, m, rng)?,
            w: rng.gen(),
            u: rng.gen(),
            slot: rng.gen_range(0..n),
            r_i: rng.gen_range(0..2),
        })
    })
    .into_iter()
    .collect()
}

/// λ values at which the moment-generating-function premise is checked.
pub const MGF_LAMBDAS: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];

/// Enumerates all `s_i` (and, when `N(M+1)` is small enough, all selections
/// for `Δ̃`) at each instance. Statistic is the worst violation of: zero
/// mean, range `[a−b, b−a]`, and `E[exp(λΔ)] ≤ exp(λ²(b−a)²/(2k))`.
pub fn check_zero_mean_and_range(
    instances: &[PremiseInstance],
    cfg: &BaseLearnerConfig<f64>,
) -> Result<CheckResult> {
    let width = LossBounds::<f64>::unit().width();
    let mut worst: f64 = 0.0;
    let mgf_excess = |values: &[f64], k: usize| -> f64 {
        MGF_LAMBDAS
            .iter()
            .map(|&lambda| {
                let mgf =
                    values.iter().map(|&v| (lambda * v).exp()).sum::<f64>() / values.len() as f64;
                mgf.ln() - lambda * lambda * width * width / (2.0 * k as f64)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    for inst in instances {
        let ss = &inst.supersample;
        let (n, m) = (ss.n(), ss.m());
        let gaps: Vec<f64> = (0..1u64 << m)
            .map(|bits| {
                within_task_gap_hat(inst.w, ss, inst.r_i, &row_from_bits(bits, m), inst.slot)
            })
            .collect::<Result<_>>()?;
        worst = worst.max((gaps.iter().sum::<f64>() / gaps.len() as f64).abs());
        worst = worst.max(gaps.iter().map(|g| g.abs() - width).fold(0.0, f64::max));
        worst = worst.max(mgf_excess(&gaps, m));

        if n * (m + 1) <= 16 {
            let u = Hyperparameter::new(inst.u)?;
            let gaps: Vec<f64> = Selection::enumerate(n, m)?
                .map(|sel| env_level_gap_tilde(u, ss, &sel, cfg))
                .collect::<Result<_>>()?;
            worst = worst.max((gaps.iter().sum::<f64>() / gaps.len() as f64).abs());
            worst = worst.max(gaps.iter().map(|g| g.abs() - width).fold(0.0, f64::max));
            worst = worst.max(mgf_excess(&gaps, n));
        }
    }
    Ok(CheckResult::identity(
        "zero mean, range and MGF of gap variables",
        worst,
        PREMISE_TOLERANCE,
        0.0,
        instances.len(),
        0,
    ))
}

/// The log-spaced λ grid in `[1e−3, 1e3]`.
pub fn lambda_grid() -> Vec<f64> {
    (0..LAMBDA_GRID_POINTS)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (LAMBDA_GRID_POINTS - 1) as f64))
        .collect()
}

/// Compares the closed-form `√(2(b−a)²I/k)` with the minimum of
/// `λ(b−a)²/(2k) + I/λ` over [`lambda_grid`]. The grid minimum must not
/// undercut the closed form and may exceed it by at most the worst-case
/// grid-resolution gap `f*·((√ρ + 1/√ρ)/2 − 1)`, `ρ` the grid ratio.
pub fn check_lambda_optimization(info: f64, k: usize, width: f64) -> Result<CheckResult> {
    let closed = optimized_square_root_bound(info, k, width)?;
    let lambda_star = optimal_lambda(info, k, width);
    if !(1e-3..=1e3).contains(&lambda_star) {
        return Err(Error::InvalidParameter(format!(
            "optimal λ = {lambda_star} lies outside the grid"
        )));
    }
    let grid_min = lambda_grid()
        .into_iter()
        .map(|lambda| pre_optimization_bound(lambda, info, k, width))
        .fold(f64::INFINITY, f64::min);
    let ratio = 10f64.powf(3.0 / (LAMBDA_GRID_POINTS - 1) as f64);
    let resolution = closed * ((ratio + 1.0 / ratio) / 2.0 - 1.0) + IDENTITY_TOLERANCE;
    let excess = grid_min - closed;
    let mut result = CheckResult::identity(
        format!("λ optimization I={info:.4} k={k}"),
        excess,
        resolution,
        0.0,
        LAMBDA_GRID_POINTS,
        0,
    );
    result.passed = excess >= -IDENTITY_TOLERANCE && excess <= resolution;
    Ok(result)
}

/// Exact pipeline vs. brute-force enumeration on random supersamples:
/// statistic is the largest absolute difference over all env and task terms.
pub fn check_oracle_equivalence(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    count: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    let model = ExactModel::new(cfg)?;
    let diffs = run_trials(stream, count, |_, rng| -> Result<f64> {
        let ss = build_meta_supersample(env, n, m, rng)?;
        let analysis = SupersampleAnalysis::new(&ss, &model)?;
        let mut worst = (analysis.env_cmi()? - oracle::env_cmi_brute_force(&ss)?).abs();
        for slot in 0..n {
            for r in 0..2u8 {
                let exact = analysis.task_cmi(slot, r)?;
                let brute = oracle::task_cmi_brute_force(&ss, slot, r, cfg.alpha())?;
                worst = worst.max((exact - brute).abs());
            }
        }
        Ok(worst)
    });
    let worst = diffs
        .into_iter()
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CheckResult::identity(
        format!("exact CMI vs brute force N={n} M={m}"),
        worst,
        IDENTITY_TOLERANCE,
        0.0,
        count,
        stream.root_seed(),
    ))
}

/// `E[exp(−ı)] = 1` on a random channel whose conditional laws all share
/// the same support: draws `(c, w)` from the joint law and averages
/// `exp(−ı(w; c))`.
pub fn check_change_of_measure_full_support(
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    use rand::distributions::{Distribution, WeightedIndex};
    use rand::Rng;

    check_trials(trials)?;
    let mut setup = stream.substream(0);
    let atoms: Vec<i64> = (0..6).collect();
    let laws = (0..4)
        .map(|_| {
            let raw: Vec<f64> = atoms.iter().map(|_| setup.gen::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            FiniteDistribution::new(atoms.clone(), raw.iter().map(|p| p / total).collect(), 5)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ConditionalTable::uniform(laws)?;
    let samplers: Vec<WeightedIndex<f64>> = table
        .laws()
        .iter()
        .map(|law| {
            WeightedIndex::new(law.probs()).map_err(|e| Error::InvalidParameter(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let values = run_trials(&stream.substream(1), trials, |_, rng| -> Result<f64> {
        let c = rng.gen_range(0..table.laws().len());
        let law = &table.laws()[c];
        let w = law.atoms()[samplers[c].sample(rng)];
        let factor = table.marginal().denom() / law.denom();
        Ok((-table.information_density(c, w * factor)?).exp())
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let e = Estimate::from_samples(&values);
    Ok(CheckResult::identity(
        "change of measure, full-support channel",
        (e.mean - 1.0).abs(),
        STDERR_SLACK * e.stderr,
        e.stderr,
        trials,
        stream.root_seed(),
    ))
}

/// Per-trial CMI values never exceed their entropy caps.
pub fn check_entropy_caps(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    let est = estimate_cmi_terms(env, n, m, cfg, trials, stream)?;
    let report = assemble_bound(&est, n, m, &LossBounds::unit())?;
    let mut result = CheckResult::identity(
        format!("entropy caps and bound cap N={n} M={m}"),
        est.cap_violations as f64,
        0.0,
        0.0,
        trials,
        stream.root_seed(),
    );
    result.passed = est.cap_violations == 0 && report.bound_value <= report.cap_value;
    Ok(result)
}

/// Closed-form `E[L(U)]` against its Monte-Carlo estimate.
pub fn check_expected_meta_loss(
    env: &TaskEnvironment<f64>,
    n: usize,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    trials: usize,
    stream: &RandomStream,
) -> Result<CheckResult> {
    let closed = expected_meta_loss_closed_form(env, n, m, cfg.alpha());
    let mc = expected_meta_loss_mc(env, n, m, cfg, &GrandMean, trials, stream)?;
    Ok(CheckResult::identity(
        format!("closed-form E[L(U)] N={n} M={m} α={}", cfg.alpha()),
        (closed - mc.mean).abs(),
        STDERR_SLACK * mc.stderr + IDENTITY_TOLERANCE,
        mc.stderr,
        trials,
        stream.root_seed(),
    ))
}

/// The full certification suite at the given environment and `M`. Each
/// check draws from its own substream of `stream`.
pub fn run_validation_suite(
    env: &TaskEnvironment<f64>,
    m: usize,
    cfg: &BaseLearnerConfig<f64>,
    trials: usize,
    stream: &RandomStream,
) -> Result<Vec<CheckResult>> {
    let lambdas = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut results = Vec::new();
    results.push(check_oracle_equivalence(
        env,
        2,
        2,
        cfg,
        100,
        &stream.substream(0),
    )?);
    for (k, n) in [2usize, 5].into_iter().enumerate() {
        let k = k as u64;
        results.extend(check_exponential_inequality_task_multi(
            env,
            n,
            m,
            cfg,
            &lambdas,
            trials,
            &stream.substream(10 + k),
        )?);
        results.extend(check_exponential_inequality_env_multi(
            env,
            n,
            m,
            cfg,
            &lambdas,
            trials,
            &stream.substream(20 + k),
        )?);
    }
    results.push(check_change_of_measure_full_support(
        trials,
        &stream.substream(30),
    )?);
    let two_task = TaskEnvironment::new(vec![0.4, 0.6], vec![0.2, 0.9])?;
    results.push(check_decomposition_exact(&two_task, 2, 2, cfg)?);
    results.push(check_decomposition(
        env,
        10,
        m,
        cfg,
        trials,
        &stream.substream(40),
    )?);
    let instances = random_premise_instances(env, 2, m, 100, &stream.substream(50))?;
    results.push(check_zero_mean_and_range(&instances, cfg)?);
    for (info, k) in [(0.05, 1), (0.5, 5), (3.0, 20)] {
        results.push(check_lambda_optimization(info, k, 1.0)?);
    }
    results.push(check_entropy_caps(
        env,
        5,
        m,
        cfg,
        trials,
        &stream.substream(60),
    )?);
    results.push(check_expected_meta_loss(
        env,
        5,
        m,
        cfg,
        trials,
        &stream.substream(70),
    )?);
    Ok(results)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 trials are needed".into(),
        ));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "λ must be finite, got {lambda}"
        )));
    }
    Ok(())
}
