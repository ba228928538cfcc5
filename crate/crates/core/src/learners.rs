//! Base-learners and meta-learners.
//!
//! The reference pair is the convex-combination base-learner
//! `W = αD + (1 − α)u` and the grand-mean meta-learner, both deterministic.
//! The traits take a random stream so stochastic learners can plug in.

use rand::RngCore;

use crate::environment::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseLearnerConfig<T> {
    alpha: T,
}

impl<T: Scalar> BaseLearnerConfig<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Hyperparameter<T>(T);

impl<T: Scalar> Hyperparameter<T> {
    pub fn new(u: T) -> Result<Self> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "hyperparameter must lie in [0, 1], got {u}"
            )));
        }
        Ok(Self(u))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// `α·mean(dataset) + (1 − α)·u`.
pub fn base_learn<T: Scalar>(
    cfg: &BaseLearnerConfig<T>,
    dataset: &Dataset,
    u: Hyperparameter<T>,
) -> Result<T> {
    let d: T = dataset.mean()?;
    Ok(cfg.alpha * d + (T::one() - cfg.alpha) * u.0)
}

/// Grand mean of all samples; minimizes the quadratic meta-training loss of
/// the convex-combination base-learner.
pub fn meta_learn<T: Scalar>(meta_training: &[Dataset]) -> Result<Hyperparameter<T>> {
    if meta_training.is_empty() {
        return Err(Error::EmptyInput("meta-training set"));
    }
    if meta_training.iter().any(Dataset::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let ones: usize = meta_training.iter().map(Dataset::count_ones).sum();
    let total: usize = meta_training.iter().map(Dataset::len).sum();
    Ok(Hyperparameter(T::of_usize(ones) / T::of_usize(total)))
}

pub trait BaseLearner<T> {
    fn learn(&self, dataset: &Dataset, u: T, rng: &mut dyn RngCore) -> Result<T>;
}

pub trait MetaLearner<T> {
    fn learn(&self, meta_training: &[Dataset], rng: &mut dyn RngCore) -> Result<T>;
}

/// `W = αD + (1 − α)u`.
#[derive(Clone, Copy, Debug)]
pub struct ConvexCombination<T>(pub BaseLearnerConfig<T>);

impl<T: Scalar> BaseLearner<T> for ConvexCombination<T> {
    fn learn(&self, dataset: &Dataset, u: T, _rng: &mut dyn RngCore) -> Result<T> {
        base_learn(&self.0, dataset, Hyperparameter::new(u)?)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GrandMean;

impl<T: Scalar> MetaLearner<T> for GrandMean {
    fn learn(&self, meta_training: &[Dataset], _rng: &mut dyn RngCore) -> Result<T> {
        meta_learn(meta_training).map(Hyperparameter::value)
    }
}

/// Ignores the data and returns a constant hyperparameter.
#[derive(Clone, Copy, Debug)]
pub struct FixedHyperparameter<T>(pub Hyperparameter<T>);

impl<T: Scalar> MetaLearner<T> for FixedHyperparameter<T> {
    fn learn(&self, meta_training: &[Dataset], _rng: &mut dyn RngCore) -> Result<T> {
        if meta_training.is_empty() {
            return Err(Error::EmptyInput("meta-training set"));
        }
        Ok(self.0.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;

    fn ds(v: &[u8]) -> Dataset {
        Dataset::new(v.to_vec()).unwrap()
    }

    #[test]
    fn base_learn_examples() {
        let cfg = BaseLearnerConfig::new(0.5).unwrap();
        let w = base_learn(
            &cfg,
            &ds(&[1, 0, 1, 0, 1]),
            Hyperparameter::new(0.2).unwrap(),
        )
        .unwrap();
        assert!((w - 0.4f64).abs() < 1e-15);

        let data = ds(&[1, 1, 0]);
        let all_data = BaseLearnerConfig::new(1.0).unwrap();
        let w = base_learn(&all_data, &data, Hyperparameter::new(0.9).unwrap()).unwrap();
        assert_eq!(w, 2.0f64 / 3.0);

        let no_data = BaseLearnerConfig::new(0.0).unwrap();
        let w = base_learn(&no_data, &data, Hyperparameter::new(0.9f64).unwrap()).unwrap();
        assert_eq!(w, 0.9);

        assert!(matches!(
            base_learn(&cfg, &ds(&[]), Hyperparameter::new(0.1).unwrap()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn config_and_hyperparameter_ranges() {
        assert!(BaseLearnerConfig::new(1.5f64).is_err());
        assert!(BaseLearnerConfig::new(f64::NAN).is_err());
        assert!(Hyperparameter::new(-0.1f64).is_err());
    }

    #[test]
    fn meta_learn_examples() {
        let u: Hyperparameter<f64> = meta_learn(&[ds(&[1, 1]), ds(&[0, 0])]).unwrap();
        assert_eq!(u.value(), 0.5);
        let u: Hyperparameter<f64> = meta_learn(&[ds(&[0, 0, 0]), ds(&[0, 0, 0])]).unwrap();
        assert_eq!(u.value(), 0.0);
        assert!(matches!(meta_learn::<f64>(&[]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            meta_learn::<f64>(&[ds(&[])]),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn trait_objects_route_to_reference_learners() {
        let mut rng = RandomStream::from_seed(0);
        let base = ConvexCombination(BaseLearnerConfig::new(0.5f64).unwrap());
        let learners: Vec<Box<dyn MetaLearner<f64>>> = vec![
            Box::new(GrandMean),
            Box::new(FixedHyperparameter(Hyperparameter::new(0.3).unwrap())),
        ];
        let data = [ds(&[1, 0]), ds(&[1, 1])];
        let us: Vec<f64> = learners
            .iter()
            .map(|l| l.learn(&data, &mut rng).unwrap())
            .collect();
        assert_eq!(us, vec![0.75, 0.3]);
        assert_eq!(base.learn(&data[1], 0.5, &mut rng).unwrap(), 0.75);
    }
}
