//! Comparison metrics for the simulation study: MSE ratios, paired win
//! proportions, and the one-sided matched-samples Wilcoxon signed-rank
//! test.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Head-to-head summary of two estimators over matched replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    /// MSE(self) / MSE(other); below 1 favors self.
    pub mse_ratio: f64,
    /// Fraction of replications where self's absolute error is strictly
    /// smaller.
    pub win_proportion: f64,
    /// One-sided signed-rank p-value against "self is not better".
    pub p_value: f64,
    pub m: usize,
}

pub fn mse(estimates: &[f64], theta: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Data("empty estimate list".into()));
    }
    Ok(estimates.iter().map(|e| (e - theta).powi(2)).sum::<f64>() / estimates.len() as f64)
}

/// One-sided Wilcoxon signed-rank test on d_i = |err_other| - |err_self|,
/// against the alternative that self's absolute errors are stochastically
/// smaller (d tends positive). Zeros dropped, ties midranked; exact
/// enumeration for up to 12 nonzero differences, otherwise a normal
/// approximation with continuity correction and tie-corrected variance.
pub fn wilcoxon_one_sided(abs_err_self: &[f64], abs_err_other: &[f64]) -> Result<f64> {
    if abs_err_self.len() != abs_err_other.len() {
        return Err(Error::Data(format!(
            "paired lists differ in length: {} vs {}",
            abs_err_self.len(),
            abs_err_other.len()
        )));
    }
    let d: Vec<f64> = abs_err_other
        .iter()
        .zip(abs_err_self)
        .map(|(o, s)| o - s)
        .filter(|d| *d != 0.0)
        .collect();
    let s = d.len();
    if s == 0 {
        return Ok(1.0);
    }
    let ranks = midranks(&d);
    let w_plus: f64 = ranks
        .iter()
        .zip(&d)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();

    if s <= 12 {
        // Exact null distribution: all 2^s sign assignments equally likely.
        let total = 1u64 << s;
        let mut at_least = 0u64;
        for mask in 0..total {
            let mut sum = 0.0;
            for (i, r) in ranks.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sum += r;
                }
            }
            if sum >= w_plus - 1e-9 {
                at_least += 1;
            }
        }
        return Ok(at_least as f64 / total as f64);
    }

    let sf = s as f64;
    let mu = sf * (sf + 1.0) / 4.0;
    let mut var = sf * (sf + 1.0) * (2.0 * sf + 1.0) / 24.0;
    // Tie correction: subtract (t^3 - t)/48 per group of tied |d|.
    let mut mags: Vec<f64> = d.iter().map(|d| d.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut i = 0;
    while i < mags.len() {
        let mut j = i + 1;
        while j < mags.len() && mags[j] == mags[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    if var <= 0.0 {
        return Ok(if w_plus > mu { 0.0 } else { 1.0 });
    }
    let z = (w_plus - mu - 0.5) / var.sqrt();
    Ok(1.0 - Normal::standard().cdf(z))
}

/// Ranks of |d| with the midrank convention for ties.
fn midranks(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().partial_cmp(&d[b].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && d[order[j]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mid;
        }
        i = j;
    }
    ranks
}

/// Bundles all pairwise metrics from matched estimate lists.
pub fn compare(
    estimates_self: &[f64],
    estimates_other: &[f64],
    theta: f64,
) -> Result<PairedComparison> {
    if estimates_self.len() != estimates_other.len() {
        return Err(Error::Data(format!(
            "paired lists differ in length: {} vs {}",
            estimates_self.len(),
            estimates_other.len()
        )));
    }
    let abs_self: Vec<f64> = estimates_self.iter().map(|e| (e - theta).abs()).collect();
    let abs_other: Vec<f64> = estimates_other.iter().map(|e| (e - theta).abs()).collect();
    let mse_self = mse(estimates_self, theta)?;
    let mse_other = mse(estimates_other, theta)?;
    let mse_ratio = if mse_self == mse_other {
        1.0
    } else {
        mse_self / mse_other
    };
    let wins = abs_self
        .iter()
        .zip(&abs_other)
        .filter(|(s, o)| s < o)
        .count();
    Ok(PairedComparison {
        mse_ratio,
        win_proportion: wins as f64 / estimates_self.len() as f64,
        p_value: wilcoxon_one_sided(&abs_self, &abs_other)?,
        m: estimates_self.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_hand_values() {
        assert_eq!(mse(&[2.0, 2.0], 2.0).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 3.0], 2.0).unwrap(), 1.0);
        assert_relative_eq!(mse(&[0.0, 3.0], 1.0).unwrap(), 2.5, max_relative = 1e-12);
        assert!(mse(&[], 0.0).is_err());
    }

    #[test]
    fn wilcoxon_extremes() {
        // Other's errors uniformly larger: maximal statistic.
        let s: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let o: Vec<f64> = s.iter().map(|x| x + 1.0).collect();
        assert!(wilcoxon_one_sided(&s, &o).unwrap() < 1e-4);

        // Alternating +-1 differences: null-centered.
        let s: Vec<f64> = (0..20).map(|i| 10.0 + (i % 2) as f64).collect();
        let o: Vec<f64> = (0..20).map(|i| 10.0 + ((i + 1) % 2) as f64).collect();
        let p = wilcoxon_one_sided(&s, &o).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 0.1);
    }

    #[test]
    fn wilcoxon_all_zero_differences() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(wilcoxon_one_sided(&s, &s).unwrap(), 1.0);
    }

    /// Independent brute-force implementation over all sign assignments.
    fn brute_force_p(s: &[f64], o: &[f64]) -> f64 {
        let d: Vec<f64> = o
            .iter()
            .zip(s)
            .map(|(o, s)| o - s)
            .filter(|d| *d != 0.0)
            .collect();
        if d.is_empty() {
            return 1.0;
        }
        let ranks = midranks(&d);
        let w: f64 = ranks
            .iter()
            .zip(&d)
            .filter(|(_, d)| **d > 0.0)
            .map(|(r, _)| r)
            .sum();
        let total = 1u64 << d.len();
        let count = (0..total)
            .filter(|mask| {
                let sum: f64 = ranks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, r)| r)
                    .sum();
                sum >= w - 1e-9
            })
            .count();
        count as f64 / total as f64
    }

    #[test]
    fn wilcoxon_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..100 {
            let m = 5 + (case % 6); // m in 5..=10
            let s: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            let o: Vec<f64> = (0..m)
                .map(|_| {
                    // Mix in exact ties and zero differences.
                    if rng.gen::<f64>() < 0.2 {
                        s[rng.gen_range(0..m)]
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect();
            let p = wilcoxon_one_sided(&s, &o).unwrap();
            let p_ref = brute_force_p(&s, &o);
            assert_eq!(p, p_ref, "case {case}: {p} vs {p_ref}");
        }
    }

    #[test]
    fn wilcoxon_rank_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..30).map(|_| rng.gen::<f64>()).collect();
        let o: Vec<f64> = (0..30).map(|_| rng.gen::<f64>()).collect();
        let p = wilcoxon_one_sided(&s, &o).unwrap();
        // A positive affine map scales every difference by the same
        // factor, preserving the ranks of |d| (a general monotone map
        // would not: the signed-rank statistic ranks differences, not
        // values).
        let ts: Vec<f64> = s.iter().map(|x| 3.5 * x + 2.0).collect();
        let to: Vec<f64> = o.iter().map(|x| 3.5 * x + 2.0).collect();
        let tp = wilcoxon_one_sided(&ts, &to).unwrap();
        assert_abs_diff_eq!(p, tp, epsilon = 1e-12);
    }

    #[test]
    fn compare_identical_and_dominating() {
        let e = [0.1, -0.2, 0.3, -0.4, 0.5, -0.6];
        let c = compare(&e, &e, 0.0).unwrap();
        assert_eq!(c.mse_ratio, 1.0);
        assert_eq!(c.win_proportion, 0.0);
        assert_eq!(c.p_value, 1.0);

        let s: Vec<f64> = (0..100).map(|i| 0.005 * (i as f64 - 49.5)).collect();
        let o: Vec<f64> = s.iter().map(|x| 2.0 * x).collect();
        let c = compare(&s, &o, 0.0).unwrap();
        assert_relative_eq!(c.mse_ratio, 0.25, max_relative = 1e-12);
        assert_eq!(c.win_proportion, 1.0);
        assert!(c.p_value < 1e-4);
    }

    #[test]
    fn win_proportions_are_complementary() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ab = compare(&a, &b, 0.0).unwrap();
        let ba = compare(&b, &a, 0.0).unwrap();
        assert_relative_eq!(ab.mse_ratio * ba.mse_ratio, 1.0, max_relative = 1e-12);
        assert_eq!(ab.win_proportion + ba.win_proportion, 1.0);
    }
}
