//! Goodness-of-fit and z-score helpers used by the consistency test and the
//! statistical test suites.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Pearson goodness-of-fit of `observed` counts against `expected_probs`.
///
/// Bins whose expected count is below `min_expected` are pooled from the
/// top down into their neighbour so the chi-square approximation holds.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if observed.len() != expected_probs.len() || observed.is_empty() {
        return Err(invalid(
            "observed and expected bins must be non-empty and of equal length",
        ));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(invalid("no observations"));
    }
    let n = total as f64;

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs).rev() {
        obs_acc += o as f64;
        exp_acc += p * n;
        if exp_acc >= min_expected {
            bins.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if obs_acc > 0.0 || exp_acc > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += obs_acc;
                last.1 += exp_acc;
            }
            None => bins.push((obs_acc, exp_acc)),
        }
    }
    if bins.len() < 2 {
        return Ok(ChiSquareTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Standardized deviation of an observed proportion `hits / trials` from `p`.
/// Degenerate `p` (0 or 1) gives 0 on an exact match and ±∞ otherwise.
pub fn proportion_z(hits: u64, trials: u64, p: f64) -> f64 {
    let observed = hits as f64 / trials as f64;
    let var = p * (1.0 - p) / trials as f64;
    if var <= 0.0 {
        return if observed == p {
            0.0
        } else {
            f64::INFINITY.copysign(observed - p)
        };
    }
    (observed - p) / var.sqrt()
}

/// Binomial standard error of a proportion.
pub fn standard_error(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Two-sided critical value with a Bonferroni split over `tests` comparisons
/// that keeps the family-wise tail of a single test at `z_critical`.
pub fn bonferroni_critical(z_critical: f64, tests: usize) -> f64 {
    if tests <= 1 {
        return z_critical;
    }
    let normal = Normal::standard();
    let alpha = 2.0 * normal.cdf(-z_critical) / tests as f64;
    -normal.inverse_cdf(alpha / 2.0)
}
