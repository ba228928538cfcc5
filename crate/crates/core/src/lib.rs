//! # metacmi
//!
//! Conditional-mutual-information (CMI) generalization bounds for
//! meta-learning, evaluated exactly and by Monte Carlo on a Bernoulli
//! mean-estimation benchmark.
//!
//! The meta-learner sees `N` tasks with `M` samples each. A *meta-supersample*
//! holds `2N` task rows of `2M` samples; fair bits `R` pick the training row
//! of each task slot and fair bits `S_i` pick the training samples inside
//! it. The bound is
//!
//! ```text
//! E[gap] ≤ √(2(b−a)²·I(U; R, S | Z̃)/N) + (1/N)·Σ_i √(2(b−a)²·I(W; S_i | Z̃, R_i)/M)
//! ```
//!
//! and never exceeds `√(2(b−a)² ln 2)·(√(1+M) + 1)`.
//!
//! ## Modules
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`environment`] | task distributions, Bernoulli data, moments |
//! | [`supersample`] | meta-supersample, selections, row/cell indexing |
//! | [`learners`] | convex-combination base-learner, grand-mean meta-learner |
//! | [`losses`] | squared loss, meta losses, gap variables, true-gap MC |
//! | [`findist`] | exact finite distributions: mix, convolve, entropy, CMI |
//! | [`bounds`] | exact CMI per supersample, MC estimation, bound assembly |
//! | [`validation`] | numeric certification of the inequalities and identities |
//! | [`experiments`] | closed forms, sweep, CSV/SVG output, CLI |
//!
//! Numeric code is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix it to `f64`.

pub mod bounds;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod findist;
pub mod learners;
pub mod losses;
pub mod mc;
pub mod scalar;
pub mod stream;
pub mod supersample;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use stream::RandomStream;

pub type TaskEnvironment = environment::TaskEnvironment<f64>;
pub type FiniteDistribution = findist::FiniteDistribution<f64>;
pub type ConditionalTable = findist::ConditionalTable<f64>;
pub type BaseLearnerConfig = learners::BaseLearnerConfig<f64>;
pub type Hyperparameter = learners::Hyperparameter<f64>;
pub type LossBounds = losses::LossBounds<f64>;
pub type Estimate = mc::Estimate<f64>;
pub type CmiEstimate = bounds::CmiEstimate<f64>;
pub type BoundReport = bounds::BoundReport<f64>;

pub use environment::{Dataset, TaskId};
pub use supersample::{MetaSupersample, Selection};
