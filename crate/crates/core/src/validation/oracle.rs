//! Brute-force enumeration oracles for small meta-supersamples.
//!
//! Everything here walks all `2^{N(M+1)}` selections, computes learner
//! outputs as exact rationals and tabulates joint laws in maps. It shares no
//! code with the convolution pipeline in [`crate::bounds`], so agreement
//! between the two is evidence that both are right.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::supersample::{meta_training_set, slot_dataset, MetaSupersample, Selection};

/// Most selection bits the oracle will enumerate.
pub const MAX_ORACLE_BITS: usize = 20;

fn alpha_ratio(alpha: f64) -> Result<Ratio<i64>> {
    let r = Ratio::<i64>::approximate_float(alpha)
        .ok_or_else(|| Error::NonFiniteSupport(format!("alpha = {alpha}")))?;
    if (*r.numer() as f64 / *r.denom() as f64 - alpha).abs() > 1e-12 {
        return Err(Error::NonFiniteSupport(format!("alpha = {alpha}")));
    }
    Ok(r)
}

fn check_size(ss: &MetaSupersample) -> Result<()> {
    let bits = ss.n() * (ss.m() + 1);
    if bits > MAX_ORACLE_BITS {
        return Err(Error::InvalidParameter(format!(
            "oracle enumeration of 2^{bits} selections is too large"
        )));
    }
    Ok(())
}

fn meta_output(ss: &MetaSupersample, sel: &Selection) -> Result<Ratio<i64>> {
    let data = meta_training_set(ss, sel)?;
    let ones: usize = data.iter().map(|d| d.count_ones()).sum();
    Ok(Ratio::new(ones as i64, (ss.n() * ss.m()) as i64))
}

fn entropy_of_counts<K>(counts: &BTreeMap<K, usize>, total: usize) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

/// `H(U | Z̃ = ss)` by tabulating `U` over every selection.
pub fn env_cmi_brute_force(ss: &MetaSupersample) -> Result<f64> {
    check_size(ss)?;
    let mut counts = BTreeMap::new();
    let mut total = 0usize;
    for sel in Selection::enumerate(ss.n(), ss.m())? {
        *counts.entry(meta_output(ss, &sel)?).or_insert(0usize) += 1;
        total += 1;
    }
    Ok(entropy_of_counts(&counts, total))
}

/// `I(W; S_i | Z̃ = ss, R_i = r_i)` by tabulating the joint law of
/// `(S_i, W)` over every selection with `R_i = r_i`, then summing
/// `p(s,w)·ln(p(s,w)/(p(s)p(w)))`.
pub fn task_cmi_brute_force(ss: &MetaSupersample, slot: usize, r_i: u8, alpha: f64) -> Result<f64> {
    check_size(ss)?;
    let alpha = alpha_ratio(alpha)?;
    let one = Ratio::from_integer(1);
    let m = ss.m() as i64;
    let mut joint: BTreeMap<(Vec<u8>, Ratio<i64>), usize> = BTreeMap::new();
    let mut total = 0usize;
    for sel in Selection::enumerate(ss.n(), ss.m())? {
        if sel.r()[slot] != r_i {
            continue;
        }
        let u = meta_output(ss, &sel)?;
        let s_i = sel.s()[slot].clone();
        let base_data = slot_dataset(ss, slot, 1 - r_i, &s_i)?;
        let d = Ratio::new(base_data.count_ones() as i64, m);
        let w = alpha * d + (one - alpha) * u;
        *joint.entry((s_i, w)).or_insert(0) += 1;
        total += 1;
    }
    let mut p_s: BTreeMap<&Vec<u8>, usize> = BTreeMap::new();
    let mut p_w: BTreeMap<&Ratio<i64>, usize> = BTreeMap::new();
    for ((s, w), &c) in &joint {
        *p_s.entry(s).or_insert(0) += c;
        *p_w.entry(w).or_insert(0) += c;
    }
    let t = total as f64;
    Ok(joint
        .iter()
        .map(|((s, w), &c)| {
            let pj = c as f64 / t;
            let ps = p_s[s] as f64 / t;
            let pw = p_w[w] as f64 / t;
            pj * (pj / (ps * pw)).ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_instances() {
        let ss = MetaSupersample::from_binary_rows(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert!((env_cmi_brute_force(&ss).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let flat = MetaSupersample::from_binary_rows(vec![vec![1; 4]; 4]).unwrap();
        assert_eq!(env_cmi_brute_force(&flat).unwrap(), 0.0);
        assert_eq!(task_cmi_brute_force(&flat, 1, 0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn refuses_large_instances() {
        let big = MetaSupersample::from_binary_rows(vec![vec![0; 10]; 8]).unwrap();
        assert!(env_cmi_brute_force(&big).is_err());
    }
}
