//! Exact finite-support distributions on a rational grid.
//!
//! Atom values are integer numerators over one common denominator, so two
//! outcomes that are equal as rationals always land on the same atom.
//! Probabilities are floating point ([`Scalar`]). All information quantities
//! are in nats.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest grid denominator accepted by default.
pub const DEFAULT_DENOMINATOR_BOUND: i64 = 1 << 40;

/// Above this span, accumulation falls back from a dense buffer to a map.
const DENSE_SPAN_LIMIT: i64 = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution<T> {
    atoms: Vec<i64>,
    probs: Vec<T>,
    denom: i64,
}

impl<T: Scalar> FiniteDistribution<T> {
    /// Builds a distribution from `(numerator, probability)` pairs over
    /// `denom`. Duplicate numerators are merged and zero-probability atoms
    /// dropped.
    pub fn new(atoms: Vec<i64>, probs: Vec<T>, denom: i64) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if denom <= 0 {
            return Err(Error::InvalidParameter(format!(
                "grid denominator must be positive, got {denom}"
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::normalization_tolerance() {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(accumulate(atoms.into_iter().zip(probs), denom))
    }

    pub fn point_mass(numerator: i64, denom: i64) -> Result<Self> {
        Self::new(vec![numerator], vec![T::one()], denom)
    }

    /// Uniform law over the given numerators (duplicates add up).
    pub fn uniform(numerators: &[i64], denom: i64) -> Result<Self> {
        if numerators.is_empty() {
            return Err(Error::EmptyInput("uniform law over no atoms"));
        }
        let p = T::one() / T::of_usize(numerators.len());
        Self::new(numerators.to_vec(), vec![p; numerators.len()], denom)
    }

    pub fn atoms(&self) -> &[i64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn value(&self, k: usize) -> T {
        T::lit(self.atoms[k] as f64) / T::lit(self.denom as f64)
    }

    /// Probability of the atom with this numerator (0 if absent).
    pub fn prob_of(&self, numerator: i64) -> T {
        match self.atoms.binary_search(&numerator) {
            Ok(k) => self.probs[k],
            Err(_) => T::zero(),
        }
    }

    pub fn mean(&self) -> T {
        (0..self.len()).map(|k| self.probs[k] * self.value(k)).sum()
    }

    /// `−Σ p ln p`, with `0 ln 0 = 0`.
    pub fn entropy(&self) -> T {
        -self
            .probs
            .iter()
            .filter(|&&p| p > T::zero())
            .map(|&p| p * p.ln())
            .sum::<T>()
    }

    /// Re-expresses the atoms over a multiple of the current denominator.
    pub fn rescaled(&self, denom: i64) -> Result<Self> {
        if denom % self.denom != 0 {
            return Err(Error::InvalidParameter(format!(
                "{denom} is not a multiple of {}",
                self.denom
            )));
        }
        let factor = denom / self.denom;
        let atoms = self
            .atoms
            .iter()
            .map(|&a| {
                a.checked_mul(factor)
                    .ok_or(overflow(a as i128 * factor as i128))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            atoms,
            probs: self.probs.clone(),
            denom,
        })
    }

    /// Law of `(mult·X + offset) / denom` where `X` is the numerator of this
    /// law. Atoms that collide are merged.
    pub fn affine(&self, mult: i64, offset: i64, denom: i64) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::InvalidParameter(
                "denominator must be positive".into(),
            ));
        }
        let mut pairs = Vec::with_capacity(self.len());
        for (&a, &p) in self.atoms.iter().zip(&self.probs) {
            let v = a
                .checked_mul(mult)
                .and_then(|x| x.checked_add(offset))
                .ok_or(overflow(a as i128 * mult as i128 + offset as i128))?;
            pairs.push((v, p));
        }
        Ok(accumulate(pairs.into_iter(), denom))
    }
}

fn overflow(denominator: i128) -> Error {
    Error::GridOverflow {
        denominator,
        bound: i64::MAX,
    }
}

/// Merges `(numerator, prob)` pairs into a sorted law, dropping zero mass.
fn accumulate<T: Scalar>(
    pairs: impl Iterator<Item = (i64, T)>,
    denom: i64,
) -> FiniteDistribution<T> {
    let pairs: Vec<(i64, T)> = pairs.collect();
    let (lo, hi) = pairs
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &(a, _)| {
            (lo.min(a), hi.max(a))
        });
    let mut atoms = Vec::new();
    let mut probs = Vec::new();
    if pairs.is_empty() {
        return FiniteDistribution {
            atoms,
            probs,
            denom,
        };
    }
    let span = (hi as i128 - lo as i128) as u128;
    if span < DENSE_SPAN_LIMIT as u128 {
        let mut dense = vec![T::zero(); span as usize + 1];
        for (a, p) in pairs {
            let slot = &mut dense[(a - lo) as usize];
            *slot = *slot + p;
        }
        for (k, p) in dense.into_iter().enumerate() {
            if p > T::zero() {
                atoms.push(lo + k as i64);
                probs.push(p);
            }
        }
    } else {
        let mut map = BTreeMap::new();
        for (a, p) in pairs {
            let e = map.entry(a).or_insert(T::zero());
            *e = *e + p;
        }
        for (a, p) in map {
            if p > T::zero() {
                atoms.push(a);
                probs.push(p);
            }
        }
    }
    FiniteDistribution {
        atoms,
        probs,
        denom,
    }
}

fn lcm(a: i64, b: i64) -> Result<i64> {
    let g = num_integer_gcd(a, b);
    (a / g)
        .checked_mul(b)
        .ok_or(overflow(a as i128 / g as i128 * b as i128))
}

fn num_integer_gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

fn common_denominator<T: Scalar>(dists: &[FiniteDistribution<T>]) -> Result<i64> {
    dists.iter().try_fold(1i64, |acc, d| lcm(acc, d.denom))
}

/// Mixture `Σ_k w_k · dists[k]`, merged exactly on the common grid.
pub fn mix<T: Scalar>(
    dists: &[FiniteDistribution<T>],
    weights: &[T],
) -> Result<FiniteDistribution<T>> {
    if dists.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} distributions but {} weights",
            dists.len(),
            weights.len()
        )));
    }
    if dists.is_empty() {
        return Err(Error::EmptyInput("mixture of no distributions"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::InvalidParameter(
            "mixture weights must be nonnegative".into(),
        ));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::normalization_tolerance() {
        return Err(Error::InvalidParameter(format!(
            "mixture weights sum to {total}, not 1"
        )));
    }
    let denom = common_denominator(dists)?;
    let mut pairs = Vec::with_capacity(dists.iter().map(FiniteDistribution::len).sum());
    for (d, &w) in dists.iter().zip(weights) {
        let factor = denom / d.denom;
        for (&a, &p) in d.atoms.iter().zip(&d.probs) {
            let a = a
                .checked_mul(factor)
                .ok_or(overflow(a as i128 * factor as i128))?;
            pairs.push((a, w * p));
        }
    }
    Ok(accumulate(pairs.into_iter(), denom))
}

/// Law of `scale · Σ_k X_k` for independent `X_k ~ dists[k]`, with the
/// default denominator bound.
pub fn convolve_scaled<T: Scalar>(
    dists: &[FiniteDistribution<T>],
    scale: Ratio<i64>,
) -> Result<FiniteDistribution<T>> {
    convolve_scaled_bounded(dists, scale, DEFAULT_DENOMINATOR_BOUND)
}

/// As [`convolve_scaled`], failing with [`Error::GridOverflow`] when the
/// result's denominator would exceed `bound`.
pub fn convolve_scaled_bounded<T: Scalar>(
    dists: &[FiniteDistribution<T>],
    scale: Ratio<i64>,
    bound: i64,
) -> Result<FiniteDistribution<T>> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("convolution of no distributions"));
    }
    if *scale.numer() <= 0 || *scale.denom() <= 0 {
        return Err(Error::InvalidParameter(
            "scale must be a positive rational".into(),
        ));
    }
    let denom = common_denominator(dists)?;
    let out_denom = denom as i128 * *scale.denom() as i128;
    if out_denom > bound as i128 {
        return Err(Error::GridOverflow {
            denominator: out_denom,
            bound,
        });
    }
    let mut acc = dists[0].rescaled(denom)?;
    for d in &dists[1..] {
        acc = convolve_pair(&acc, &d.rescaled(denom)?)?;
    }
    acc.affine(*scale.numer(), 0, out_denom as i64)
}

fn convolve_pair<T: Scalar>(
    x: &FiniteDistribution<T>,
    y: &FiniteDistribution<T>,
) -> Result<FiniteDistribution<T>> {
    let mut pairs = Vec::with_capacity(x.len() * y.len());
    for (&a, &p) in x.atoms.iter().zip(&x.probs) {
        for (&b, &q) in y.atoms.iter().zip(&y.probs) {
            let s = a.checked_add(b).ok_or(overflow(a as i128 + b as i128))?;
            pairs.push((s, p * q));
        }
    }
    Ok(accumulate(pairs.into_iter(), x.denom))
}

/// A channel from finitely many conditions to finite-support laws:
/// condition `c` has probability `cond_probs[c]` and output law `laws[c]`.
/// Condition labels are bit-packed values of the conditioning variable.
#[derive(Clone, Debug)]
pub struct ConditionalTable<T> {
    labels: Vec<u64>,
    cond_probs: Vec<T>,
    laws: Vec<FiniteDistribution<T>>,
    marginal: FiniteDistribution<T>,
}

impl<T: Scalar> ConditionalTable<T> {
    pub fn new(
        labels: Vec<u64>,
        cond_probs: Vec<T>,
        laws: Vec<FiniteDistribution<T>>,
    ) -> Result<Self> {
        if labels.len() != laws.len() || cond_probs.len() != laws.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels, {} condition probabilities, {} laws",
                labels.len(),
                cond_probs.len(),
                laws.len()
            )));
        }
        let marginal = mix(&laws, &cond_probs)?;
        Ok(Self {
            labels,
            cond_probs,
            laws,
            marginal,
        })
    }

    /// Conditions `0..laws.len()` with equal probability.
    pub fn uniform(laws: Vec<FiniteDistribution<T>>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::EmptyInput("conditional table without conditions"));
        }
        let k = laws.len();
        Self::new(
            (0..k as u64).collect(),
            vec![T::one() / T::of_usize(k); k],
            laws,
        )
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn cond_probs(&self) -> &[T] {
        &self.cond_probs
    }

    pub fn laws(&self) -> &[FiniteDistribution<T>] {
        &self.laws
    }

    pub fn marginal(&self) -> &FiniteDistribution<T> {
        &self.marginal
    }

    /// Position of a condition label.
    pub fn condition_index(&self, label: u64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// `H(marginal) − Σ_c p_c H(law_c)`, clamped at 0 when within
    /// `−1e−12`.
    pub fn conditional_mi(&self) -> T {
        let conditional: T = self
            .cond_probs
            .iter()
            .zip(&self.laws)
            .map(|(&p, law)| p * law.entropy())
            .sum();
        let mi = self.marginal.entropy() - conditional;
        if mi < T::zero() && mi > -T::lit(1e-12) {
            T::zero()
        } else {
            mi
        }
    }

    /// `ln(law_c(value) / marginal(value))` for the condition at `index` and
    /// atom numerator `numerator` (on the marginal's grid).
    pub fn information_density(&self, index: usize, numerator: i64) -> Result<T> {
        let law = self.laws.get(index).ok_or(Error::IndexOutOfRange {
            index: index + 1,
            max: self.laws.len(),
        })?;
        let factor = self.marginal.denom / law.denom;
        if numerator % factor != 0 {
            return Err(Error::OutsideSupport);
        }
        let joint = law.prob_of(numerator / factor);
        if joint <= T::zero() {
            return Err(Error::OutsideSupport);
        }
        let marginal = self.marginal.prob_of(numerator);
        Ok(joint.ln() - marginal.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use rand::Rng;

    type Dist = FiniteDistribution<f64>;

    fn random_dist(rng: &mut RandomStream, atoms: usize, denom: i64) -> Dist {
        let nums: Vec<i64> = (0..atoms).map(|_| rng.gen_range(-4..8)).collect();
        let raw: Vec<f64> = (0..atoms).map(|_| rng.gen::<f64>() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        Dist::new(nums, raw.iter().map(|p| p / total).collect(), denom).unwrap()
    }

    #[test]
    fn construction_merges_and_validates() {
        let d = Dist::new(vec![3, 1, 3, 2], vec![0.25, 0.25, 0.25, 0.25], 4).unwrap();
        assert_eq!(d.atoms(), &[1, 2, 3]);
        assert_eq!(d.probs(), &[0.25, 0.25, 0.5]);
        assert!(Dist::new(vec![0, 1], vec![0.5, 0.6], 1).is_err());
        assert!(Dist::new(vec![0, 1], vec![1.5, -0.5], 1).is_err());
        assert!(Dist::new(vec![0], vec![1.0], 0).is_err());
        assert!(Dist::new(vec![0], vec![1.0, 0.0], 1).is_err());
        let d = Dist::new(vec![0, 1], vec![1.0, 0.0], 1).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn mix_examples() {
        let zero = Dist::point_mass(0, 1).unwrap();
        let one = Dist::point_mass(1, 1).unwrap();
        let coin = mix(&[zero.clone(), one.clone()], &[0.5, 0.5]).unwrap();
        assert_eq!(coin, Dist::new(vec![0, 1], vec![0.5, 0.5], 1).unwrap());
        let same = mix(
            &[coin.clone(), coin.clone(), coin.clone()],
            &[0.2, 0.3, 0.5],
        )
        .unwrap();
        assert_eq!(same.atoms(), coin.atoms());
        for (a, b) in same.probs().iter().zip(coin.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(
            mix(std::slice::from_ref(&coin), &[0.5, 0.5]),
            Err(Error::ShapeMismatch(_))
        ));
        // Different grids merge on their common multiple: 1/2 == 2/4.
        let half = Dist::point_mass(1, 2).unwrap();
        let two_quarters = Dist::point_mass(2, 4).unwrap();
        let merged = mix(&[half, two_quarters], &[0.5, 0.5]).unwrap();
        assert_eq!((merged.atoms(), merged.denom()), (&[2i64][..], 4));
    }

    #[test]
    fn marginal_matches_brute_force_tabulation() {
        let mut rng = RandomStream::from_seed(31);
        for _ in 0..100 {
            let k = rng.gen_range(2..5);
            let laws: Vec<Dist> = (0..k).map(|_| random_dist(&mut rng, 3, 3)).collect();
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.1).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let table =
                ConditionalTable::new((0..k as u64).collect(), weights.clone(), laws.clone())
                    .unwrap();
            let mut brute: Vec<(i64, f64)> = Vec::new();
            for (law, w) in laws.iter().zip(&weights) {
                for (&a, &p) in law.atoms().iter().zip(law.probs()) {
                    match brute.iter_mut().find(|(x, _)| *x == a) {
                        Some(e) => e.1 += w * p,
                        None => brute.push((a, w * p)),
                    }
                }
            }
            brute.sort_by_key(|e| e.0);
            let m = table.marginal();
            assert_eq!(
                m.atoms(),
                brute.iter().map(|e| e.0).collect::<Vec<_>>().as_slice()
            );
            for (p, (_, q)) in m.probs().iter().zip(&brute) {
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn convolve_examples() {
        let coin = Dist::uniform(&[0, 1], 1).unwrap();
        let c = convolve_scaled(&[coin.clone(), coin.clone()], Ratio::new(1, 2)).unwrap();
        assert_eq!(c.denom(), 2);
        assert_eq!(c.atoms(), &[0, 1, 2]);
        assert_eq!(c.probs(), &[0.25, 0.5, 0.25]);
        assert_eq!(c.value(1), 0.5);

        let d = Dist::new(vec![0, 2, 5], vec![0.2, 0.3, 0.5], 7).unwrap();
        assert_eq!(
            convolve_scaled(std::slice::from_ref(&d), Ratio::new(1, 1)).unwrap(),
            d
        );
    }

    #[test]
    fn convolve_matches_exhaustive_enumeration() {
        let mut rng = RandomStream::from_seed(17);
        for _ in 0..100 {
            let ds: Vec<Dist> = (0..3).map(|_| random_dist(&mut rng, 3, 2)).collect();
            let got = convolve_scaled(&ds, Ratio::new(1, 3)).unwrap();
            let mut brute: Vec<(i64, f64)> = Vec::new();
            for (&a, &p) in ds[0].atoms().iter().zip(ds[0].probs()) {
                for (&b, &q) in ds[1].atoms().iter().zip(ds[1].probs()) {
                    for (&c, &r) in ds[2].atoms().iter().zip(ds[2].probs()) {
                        let v = a + b + c;
                        match brute.iter_mut().find(|(x, _)| *x == v) {
                            Some(e) => e.1 += p * q * r,
                            None => brute.push((v, p * q * r)),
                        }
                    }
                }
            }
            brute.sort_by_key(|e| e.0);
            assert_eq!(got.denom(), 6);
            assert_eq!(
                got.atoms(),
                brute.iter().map(|e| e.0).collect::<Vec<_>>().as_slice()
            );
            for (p, (_, q)) in got.probs().iter().zip(&brute) {
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn convolve_grouping_is_irrelevant() {
        let mut rng = RandomStream::from_seed(18);
        let ds: Vec<Dist> = (0..4).map(|_| random_dist(&mut rng, 3, 5)).collect();
        let one = Ratio::new(1, 1);
        let flat = convolve_scaled(&ds, one).unwrap();
        let left = convolve_scaled(&ds[..2], one).unwrap();
        let right = convolve_scaled(&ds[2..], one).unwrap();
        let grouped = convolve_scaled(&[right, left], one).unwrap();
        assert_eq!(flat.atoms(), grouped.atoms());
        for (p, q) in flat.probs().iter().zip(grouped.probs()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn convolve_reports_grid_overflow() {
        let d = Dist::point_mass(1, 1 << 30).unwrap();
        assert!(matches!(
            convolve_scaled_bounded(std::slice::from_ref(&d), Ratio::new(1, 1 << 20), 1 << 40),
            Err(Error::GridOverflow { .. })
        ));
        assert!(convolve_scaled_bounded(&[d], Ratio::new(1, 1 << 9), 1 << 40).is_ok());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(Dist::point_mass(3, 1).unwrap().entropy(), 0.0);
        let u = Dist::uniform(&[0, 1, 2, 3, 4], 1).unwrap();
        assert!((u.entropy() - 5f64.ln()).abs() < 1e-15);
        let d = Dist::new(vec![0, 1], vec![0.25, 0.75], 1).unwrap();
        let expect = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((d.entropy() - expect).abs() < 1e-15);
        assert!((d.entropy() - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn conditional_mi_examples() {
        let coin = Dist::uniform(&[0, 1], 1).unwrap();
        let indep = ConditionalTable::uniform(vec![coin.clone(); 4]).unwrap();
        assert_eq!(indep.conditional_mi(), 0.0);
        for v in [0, 1] {
            assert!(indep.information_density(2, v).unwrap().abs() < 1e-15);
        }

        let k = 6;
        let points: Vec<Dist> = (0..k).map(|c| Dist::point_mass(c, 1).unwrap()).collect();
        let det = ConditionalTable::uniform(points).unwrap();
        assert!((det.conditional_mi() - (k as f64).ln()).abs() < 1e-14);
        for c in 0..k as usize {
            assert!(
                (det.information_density(c, c as i64).unwrap() - (k as f64).ln()).abs() < 1e-14
            );
        }
        assert!(matches!(
            det.information_density(0, 3),
            Err(Error::OutsideSupport)
        ));
    }

    #[test]
    fn conditional_mi_matches_double_sum() {
        let mut rng = RandomStream::from_seed(44);
        for _ in 0..200 {
            let laws: Vec<Dist> = (0..4).map(|_| random_dist(&mut rng, 4, 1)).collect();
            let raw: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            let pc: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let table = ConditionalTable::new((0..4).collect(), pc.clone(), laws.clone()).unwrap();
            let mut direct = 0.0;
            for (c, law) in laws.iter().enumerate() {
                for (&a, &p) in law.atoms().iter().zip(law.probs()) {
                    let marg: f64 = laws.iter().zip(&pc).map(|(l, w)| w * l.prob_of(a)).sum();
                    direct += pc[c] * p * (p / marg).ln();
                }
            }
            let mi = table.conditional_mi();
            assert!((mi - direct).abs() < 1e-12, "{mi} vs {direct}");
            assert!(mi >= 0.0 && mi <= 4f64.ln() + 1e-12);

            // E_joint[ı] equals the CMI; E_joint[exp(−ı)] ≤ 1.
            let mut e_density = 0.0;
            let mut e_exp = 0.0;
            for (c, law) in laws.iter().enumerate() {
                for (&a, &p) in law.atoms().iter().zip(law.probs()) {
                    let i = table.information_density(c, a).unwrap();
                    e_density += pc[c] * p * i;
                    e_exp += pc[c] * p * (-i).exp();
                }
            }
            assert!((e_density - mi).abs() < 1e-12);
            assert!(e_exp <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn change_of_measure_is_exact_for_full_support() {
        let mut rng = RandomStream::from_seed(45);
        let atoms = [0i64, 1, 2];
        for _ in 0..50 {
            let laws: Vec<Dist> = (0..3)
                .map(|_| {
                    let raw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() + 0.05).collect();
                    let t: f64 = raw.iter().sum();
                    Dist::new(atoms.to_vec(), raw.iter().map(|p| p / t).collect(), 1).unwrap()
                })
                .collect();
            let table = ConditionalTable::uniform(laws.clone()).unwrap();
            let mut e_exp = 0.0;
            for (c, law) in laws.iter().enumerate() {
                for (&a, &p) in law.atoms().iter().zip(law.probs()) {
                    e_exp += p / 3.0 * (-table.information_density(c, a).unwrap()).exp();
                }
            }
            assert!((e_exp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_merges_collisions() {
        let d = Dist::uniform(&[0, 1, 2], 1).unwrap();
        let collapsed = d.affine(0, 5, 3).unwrap();
        assert_eq!(
            (collapsed.atoms(), collapsed.probs()),
            (&[5i64][..], &[1.0][..])
        );
        let shifted = d.affine(2, 1, 3).unwrap();
        assert_eq!(shifted.atoms(), &[1, 3, 5]);
    }

    #[test]
    fn f32_entropy() {
        let d = FiniteDistribution::<f32>::uniform(&[0, 1, 2, 3], 1).unwrap();
        assert!((d.entropy() - 4f32.ln()).abs() < 1e-6);
    }
}
