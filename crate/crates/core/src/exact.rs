//! Exact reference values: satisfying-minterm counts, the expected correlator
//! output they imply, and the closed-form SNR model.
//!
//! A sample of `τ·Σ` expands into products of draws. Only products in which
//! every draw appears squared have non-zero expectation, and those are exactly
//! the minterms that appear in `τ` (consistent with the bindings) and in every
//! clause superposition of `Σ`, i.e. the satisfying assignments. Each
//! contributes `E[x²]^{nm} = (1/12)^{nm}` for uniform draws on `[-0.5, 0.5]`,
//! so `E[τ·Σ] = K·(1/12)^{nm}`.

use serde::{Deserialize, Serialize};

use crate::cnf::{CnfFormula, PartialAssignment};
use crate::error::{NblError, Result};

/// Largest number of unbound variables [`count_satisfying`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 30;

/// Second moment of a uniform draw on `[-0.5, 0.5]`.
pub const UNIFORM_SECOND_MOMENT: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub satisfying_count: u64,
    pub analytic_mean: f64,
    pub satisfiable: bool,
    /// n·m of the formula the count was taken on.
    pub noise_width: usize,
}

/// `K·(1/12)^{nm}`. Underflows to 0 in double precision for `nm` beyond ~285;
/// use [`log10_analytic_mean`] for magnitudes there.
pub fn analytic_mean(count: u64, noise_width: usize) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let exponent = i32::try_from(noise_width).unwrap_or(i32::MAX);
    count as f64 * UNIFORM_SECOND_MOMENT.powi(exponent)
}

/// `log10(K·(1/12)^{nm})`, `-inf` for `K = 0`. Diagnostic only.
pub fn log10_analytic_mean(count: u64, noise_width: usize) -> f64 {
    if count == 0 {
        return f64::NEG_INFINITY;
    }
    (count as f64).log10() - noise_width as f64 * 12f64.log10()
}

/// Counts full assignments that extend `bindings` and satisfy `formula`.
pub fn count_satisfying(formula: &CnfFormula, bindings: &PartialAssignment) -> Result<ExactResult> {
    if bindings.len() != formula.num_vars() {
        return Err(NblError::AssignmentLength {
            expected: formula.num_vars(),
            got: bindings.len(),
        });
    }
    let free: Vec<usize> = bindings.unbound_variables().collect();
    if free.len() > ENUMERATION_LIMIT {
        return Err(NblError::EnumerationGuard {
            unbound: free.len(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut values: Vec<bool> = bindings
        .values()
        .iter()
        .map(|v| v.as_bool().unwrap_or(false))
        .collect();
    let mut count = 0u64;
    for mask in 0u64..(1u64 << free.len()) {
        for (bit, &var) in free.iter().enumerate() {
            values[var - 1] = mask >> bit & 1 == 1;
        }
        let satisfied = formula.clauses().iter().all(|c| {
            c.literals()
                .iter()
                .any(|l| l.is_satisfied_by(values[l.variable() - 1]))
        });
        count += satisfied as u64;
    }
    let noise_width = formula.noise_width();
    Ok(ExactResult {
        satisfying_count: count,
        analytic_mean: analytic_mean(count, noise_width),
        satisfiable: count > 0,
        noise_width,
    })
}

/// Closed-form discriminability model. These are model estimates: the
/// variance term treats all `O(2^{nm})` cross products as independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub num_vars: usize,
    pub num_clauses: usize,
    pub samples: u64,
    pub satisfying_count: u64,
    /// Expected mean with `K` solutions, `K·(1/12)^{nm}`.
    pub mu1: f64,
    /// Modelled standard deviation of the mean, `(1/12)^{nm}·2^{nm}/sqrt(N-1)`.
    pub sigma: f64,
    /// `K·sqrt(N-1) / (3·2^{nm})`.
    pub snr: f64,
}

pub fn snr(num_vars: usize, num_clauses: usize, samples: u64, satisfying_count: u64) -> Result<SnrEstimate> {
    if samples < 2 {
        return Err(NblError::SnrDomain("sample count must be at least 2"));
    }
    if num_vars == 0 || num_clauses == 0 {
        return Err(NblError::SnrDomain("n and m must be positive"));
    }
    if satisfying_count == 0 {
        return Err(NblError::SnrDomain("K must be positive"));
    }
    let nm = (num_vars * num_clauses) as f64;
    let root = ((samples - 1) as f64).sqrt();
    let two_nm = 2f64.powf(nm);
    let k = satisfying_count as f64;
    Ok(SnrEstimate {
        num_vars,
        num_clauses,
        samples,
        satisfying_count,
        mu1: k * UNIFORM_SECOND_MOMENT.powf(nm),
        sigma: UNIFORM_SECOND_MOMENT.powf(nm) * two_nm / root,
        snr: k * root / (3.0 * two_nm),
    })
}

/// Smallest `N` with `snr(n, m, N, K) >= target`, or [`NblError::Infeasible`]
/// when that exceeds `cap`. `n·m = 0` is accepted (a constant signal).
pub fn required_samples(
    num_vars: usize,
    num_clauses: usize,
    satisfying_count: u64,
    target_snr: f64,
    cap: u64,
) -> Result<u64> {
    if !(target_snr > 0.0 && target_snr.is_finite()) {
        return Err(NblError::SnrDomain("target SNR must be positive"));
    }
    if satisfying_count == 0 {
        return Err(NblError::SnrDomain("K must be positive"));
    }
    let nm = (num_vars * num_clauses) as f64;
    let k = satisfying_count as f64;
    let model = |n: u64| k * ((n - 1) as f64).sqrt() / (3.0 * 2f64.powf(nm));
    let root = 3.0 * 2f64.powf(nm) * target_snr / k;
    let estimate = 1.0 + (root * root).ceil();
    if !estimate.is_finite() || estimate > cap as f64 + 1.0 {
        return Err(NblError::Infeasible {
            required: estimate,
            cap,
        });
    }
    // correct for rounding in the closed form so minimality is exact
    let mut n = (estimate as u64).max(2);
    while n > 2 && model(n - 1) >= target_snr {
        n -= 1;
    }
    while model(n) < target_snr {
        n += 1;
    }
    if n > cap {
        return Err(NblError::Infeasible {
            required: n as f64,
            cap,
        });
    }
    Ok(n)
}
