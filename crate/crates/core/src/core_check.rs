//! Coalition values by size and the equal-allocation core test.
//!
//! In a symmetric game the core is non-empty iff the equal split of the
//! grand coalition is in it, which reduces to `beta_n >= beta_m` for every
//! smaller coalition size `m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_correlation, validate_params, MarketParams};
use crate::solver::solve_optimal_quantity;

pub const DEFAULT_CORE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreReport {
    pub n: u64,
    /// `beta_1..beta_n`.
    pub beta: Vec<f64>,
    pub in_core: bool,
    /// `min_{m < n} (beta_n - beta_m)`, zero when `n = 1`.
    pub worst_margin: f64,
    /// Coalition size attaining `worst_margin`.
    pub witness_m: u64,
}

/// `J_dot_m` for `m = 1..=n`.
pub fn characteristic_values(params: &MarketParams, n: u64) -> Result<Vec<f64>> {
    validate_params(params)?;
    check_correlation(n, params.rho)?;
    (1..=n)
        .into_par_iter()
        .map(|m| solve_optimal_quantity(m, params).map(|res| res.j_dot))
        .collect()
}

/// Checks whether the equal allocation of the grand coalition of size `n`
/// lies in the core. `tolerance` is relative to the larger of the compared
/// allocations.
pub fn check_equal_allocation_core(params: &MarketParams, n: u64, tolerance: f64) -> Result<CoreReport> {
    validate_params(params)?;
    check_correlation(n, params.rho)?;
    let beta: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|m| solve_optimal_quantity(m, params).map(|res| res.beta))
        .collect::<Result<_>>()?;

    let grand = beta[beta.len() - 1];
    let mut worst_margin = 0.0;
    let mut witness_m = n;
    let mut in_core = true;
    for (idx, &b) in beta[..beta.len() - 1].iter().enumerate() {
        let margin = grand - b;
        if idx == 0 || margin < worst_margin {
            worst_margin = margin;
            witness_m = idx as u64 + 1;
        }
        if margin < -tolerance * grand.abs().max(b.abs()) {
            in_core = false;
        }
    }
    Ok(CoreReport { n, beta, in_core, worst_margin, witness_m })
}
