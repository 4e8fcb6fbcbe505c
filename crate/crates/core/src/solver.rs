//! Closed-form analytics for the symmetric transshipment game.
//!
//! Every quantity is expressed through the standardized order quantity
//! `Y = (X - mu) / sigma` and the pooling factor `L_n`. The optimal quantity
//! solves
//!
//! ```text
//! R = gamma * Phi(Y) + (1 - gamma) * Phi(L_n * Y)
//! ```
//!
//! which is strictly increasing in `Y`, so a bracketing solver always finds
//! the unique root. The residual is evaluated in centered form
//! (`Phi - 1/2` through `erf`) so that near-mean games keep full relative
//! precision in `Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_correlation, pooling_factor, validate_params, DerivedEconomics, GameType,
    MarketParams, MEAN_GAME_TOL,
};
use crate::normal::{self, Probability, StandardizedQuantity};

/// Initial bracket for the standardized root.
pub const BRACKET: (f64, f64) = (-12.0, 12.0);
const MAX_BISECTIONS: usize = 200;
const BRACKET_WIDTH_TOL: f64 = 1e-13;

/// Optimal decision and value for a coalition of `n` identical newsvendors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub n: u64,
    #[serde(rename = "Y_n")]
    pub y: f64,
    #[serde(rename = "X_n")]
    pub x: f64,
    #[serde(rename = "J_dot_n")]
    pub j_dot: f64,
    #[serde(rename = "beta_n")]
    pub beta: f64,
    #[serde(rename = "omega_n")]
    pub omega: f64,
    /// `|gamma Phi(Y_n) + gamma~ Phi(L_n Y_n) - R|`.
    pub residual: f64,
    /// `Phi(Y_n)`, the probability that the coalition ends without net shortage.
    pub no_shortage_prob: f64,
    #[serde(rename = "L_n")]
    pub pooling_factor: f64,
}

impl SolveResult {
    /// `L_n * Y_n`.
    pub fn pooled_y(&self) -> f64 {
        self.pooling_factor * self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutRegime {
    BelowCut,
    AtOrAboveCut,
}

/// Limits of `Phi(Y_n)` and `Phi(L_n Y_n)` as the coalition grows (`rho = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub game_type: GameType,
    pub regime: CutRegime,
    /// `2g` for under-mean games, `2 g~` for over-mean games.
    pub cut_value: f64,
    #[serde(rename = "phi_Y_inf")]
    pub phi_y_inf: Probability,
    #[serde(rename = "Y_inf")]
    pub y_inf: StandardizedQuantity,
    #[serde(rename = "phi_LY_inf")]
    pub phi_ly_inf: Probability,
}

/// Residual of the optimality condition for an explicit pooling factor.
#[inline]
fn residual_at(y: f64, pooling: f64, econ: &DerivedEconomics) -> f64 {
    econ.gamma * normal::cdf_centered(y) + econ.gamma_tilde * normal::cdf_centered(pooling * y)
        - econ.fractile_offset()
}

#[inline]
fn residual_slope(y: f64, pooling: f64, econ: &DerivedEconomics) -> f64 {
    econ.gamma * normal::pdf(y) + econ.gamma_tilde * pooling * normal::pdf(pooling * y)
}

/// `gamma Phi(Y) + gamma~ Phi(L_n Y) - R`.
pub fn optimality_residual(
    y: StandardizedQuantity,
    n: u64,
    econ: &DerivedEconomics,
    rho: f64,
) -> Result<f64> {
    let pooling = pooling_factor(n, rho)?;
    Ok(residual_at(y.get(), pooling, econ))
}

/// Root of the optimality condition for a given pooling factor.
///
/// Bisection on [`BRACKET`] down to a width of `1e-13`, then Newton polish
/// with the analytic slope, kept only while it stays in the bracket and
/// reduces the residual.
pub fn solve_for_pooling(econ: &DerivedEconomics, pooling: f64) -> Result<f64> {
    if econ.classify(MEAN_GAME_TOL) == GameType::Mean {
        return Ok(0.0);
    }
    let f = |y: f64| residual_at(y, pooling, econ);
    let (mut lo, mut hi) = BRACKET;
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BRACKET_WIDTH_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    let mut fy = f(y);
    for _ in 0..2 {
        let slope = residual_slope(y, pooling, econ);
        if slope <= 0.0 || fy == 0.0 {
            break;
        }
        let candidate = y - fy / slope;
        if !(lo..=hi).contains(&candidate) {
            break;
        }
        let fc = f(candidate);
        if fc.abs() >= fy.abs() {
            break;
        }
        y = candidate;
        fy = fc;
    }
    Ok(y)
}

/// Per-agent value at the optimum:
/// `(g + g~)(R mu - sigma [gamma phi(Y) + gamma~ phi(L Y) / L])`.
fn allocation_at(y: f64, pooling: f64, econ: &DerivedEconomics, params: &MarketParams) -> f64 {
    let risk = econ.gamma * normal::pdf(y) + econ.gamma_tilde * normal::pdf(pooling * y) / pooling;
    econ.margin() * (econ.fractile * params.mu - params.sigma * risk)
}

/// `n sigma (A(Y) - A(L Y) / L)` with `A` the antiderivative of `Phi`.
fn transshipment_at(y: f64, n: u64, pooling: f64, sigma: f64) -> f64 {
    // Y (Phi(Y) - Phi(LY)) taken from whichever tail keeps precision.
    let cdf_gap = if y > 0.0 {
        normal::cdf(-pooling * y) - normal::cdf(-y)
    } else {
        normal::cdf(y) - normal::cdf(pooling * y)
    };
    let per_agent = y * cdf_gap + normal::pdf(y) - normal::pdf(pooling * y) / pooling;
    (n as f64 * sigma * per_agent).max(0.0)
}

fn solve_validated(n: u64, params: &MarketParams, econ: &DerivedEconomics) -> Result<SolveResult> {
    let pooling = pooling_factor(n, params.rho)?;
    let y = if params.rho == 1.0 && n > 1 {
        // L_n = 1 for every n: the coalition repeats the single newsvendor.
        solve_for_pooling(econ, 1.0)?
    } else {
        solve_for_pooling(econ, pooling)?
    };
    let beta = allocation_at(y, pooling, econ, params);
    Ok(SolveResult {
        n,
        y,
        x: params.mu + params.sigma * y,
        j_dot: beta * n as f64,
        beta,
        omega: transshipment_at(y, n, pooling, params.sigma),
        residual: residual_at(y, pooling, econ).abs(),
        no_shortage_prob: normal::cdf(y),
        pooling_factor: pooling,
    })
}

/// Optimal standardized quantity `Y_n` and the values that follow from it.
pub fn solve_optimal_quantity(n: u64, params: &MarketParams) -> Result<SolveResult> {
    let econ = validate_params(params)?;
    solve_validated(n, params, &econ)
}

/// Expected coalition profit `J_n(X)` for a common order quantity `X`.
pub fn expected_profit(x: f64, n: u64, params: &MarketParams) -> Result<f64> {
    let econ = validate_params(params)?;
    let pooling = pooling_factor(n, params.rho)?;
    let sigma = params.sigma;
    let y = (x - params.mu) / sigma;
    let own = normal::antiderivative(y);
    let pooled = y * normal::cdf(pooling * y) + normal::pdf(pooling * y) / pooling;
    let per_agent = econ.fractile * (params.mu + sigma * y)
        - econ.gamma * sigma * own
        - econ.gamma_tilde * sigma * pooled;
    Ok(n as f64 * econ.margin() * per_agent)
}

/// Equal allocation `beta_n = J_dot_n / n` from the closed form at `Y_n`.
pub fn equal_allocation(n: u64, params: &MarketParams) -> Result<f64> {
    Ok(solve_optimal_quantity(n, params)?.beta)
}

/// Expected transshipment amount `omega_n(Y)`.
pub fn expected_transshipment(y: StandardizedQuantity, n: u64, params: &MarketParams) -> Result<f64> {
    validate_params(params)?;
    let pooling = pooling_factor(n, params.rho)?;
    Ok(transshipment_at(y.get(), n, pooling, params.sigma))
}

/// `E[sum H_i] = n sigma A(Y)`.
pub fn expected_total_surplus(y: StandardizedQuantity, n: u64, params: &MarketParams) -> Result<f64> {
    validate_params(params)?;
    check_correlation(n, params.rho)?;
    Ok(n as f64 * params.sigma * normal::antiderivative(y.get()))
}

/// `E[sum E_i] = n sigma (A(Y) - Y)`.
pub fn expected_total_shortage(y: StandardizedQuantity, n: u64, params: &MarketParams) -> Result<f64> {
    validate_params(params)?;
    check_correlation(n, params.rho)?;
    Ok(n as f64 * params.sigma * (normal::antiderivative(y.get()) - y.get()))
}

/// Asymptotic behaviour of the optimal quantities for independent demands.
pub fn limit_analysis(params: &MarketParams) -> Result<LimitResult> {
    let econ = validate_params(params)?;
    if params.rho != 0.0 {
        return Err(Error::UnsupportedRegime { rho: params.rho });
    }
    let DerivedEconomics { g, g_tilde, p, .. } = econ;
    let half_t = 0.5 * params.t;
    let game_type = econ.classify(MEAN_GAME_TOL);
    let (cut_value, regime, phi_y, phi_ly) = match game_type {
        GameType::Mean => {
            let regime = if half_t >= g { CutRegime::AtOrAboveCut } else { CutRegime::BelowCut };
            (2.0 * g, regime, 0.5, 0.5)
        }
        GameType::UnderMean => {
            if half_t < g {
                (2.0 * g, CutRegime::BelowCut, 0.5, (g - half_t) / p)
            } else {
                (2.0 * g, CutRegime::AtOrAboveCut, g / params.t, 0.0)
            }
        }
        GameType::OverMean => {
            if half_t < g_tilde {
                (2.0 * g_tilde, CutRegime::BelowCut, 0.5, 1.0 - (g_tilde - half_t) / p)
            } else {
                (2.0 * g_tilde, CutRegime::AtOrAboveCut, 1.0 - g_tilde / params.t, 1.0)
            }
        }
    };
    let y_inf = if phi_y == 0.5 { 0.0 } else { normal::inv_cdf(phi_y) };
    Ok(LimitResult {
        game_type,
        regime,
        cut_value,
        phi_y_inf: Probability::new(phi_y)?,
        y_inf: StandardizedQuantity::new(y_inf)?,
        phi_ly_inf: Probability::new(phi_ly)?,
    })
}

/// Numerical limit of `Y_n` for `0 < rho <= 1`, where `L_n -> 1 / sqrt(rho)`
/// stays bounded: the root of `R = gamma Phi(Y) + gamma~ Phi(Y / sqrt(rho))`.
///
/// This is a diagnostic only; it is not part of the closed-form limit table.
pub fn finite_correlation_limit(params: &MarketParams) -> Result<f64> {
    let econ = validate_params(params)?;
    if !(params.rho > 0.0 && params.rho <= 1.0) {
        return Err(Error::FiniteLimitDomain(params.rho));
    }
    solve_for_pooling(&econ, 1.0 / params.rho.sqrt())
}

/// Which way the optimal-quantity sequences failed to move, by coalition size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub game_type: Option<GameType>,
    /// Strict monotonicity is only expected for `rho < 1`.
    pub strict: bool,
    /// Sizes `n` where `Y_n` did not move strictly toward zero from `Y_{n-1}`.
    pub y_violations: Vec<u64>,
    /// Sizes `n` where `L_n Y_n` did not move strictly away from zero.
    pub pooled_violations: Vec<u64>,
    /// Sizes `n` where the sign of `Y_n` differs from the sign of `Y_1`.
    pub sign_violations: Vec<u64>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.y_violations.is_empty()
            && self.pooled_violations.is_empty()
            && self.sign_violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySequence {
    pub results: Vec<SolveResult>,
    pub report: MonotonicityReport,
}

/// Solves `n = 1..=n_max` and checks sign preservation and monotonicity of
/// `Y_n` and `L_n Y_n`.
pub fn quantity_sequence(params: &MarketParams, n_max: u64) -> Result<QuantitySequence> {
    let econ = validate_params(params)?;
    check_correlation(n_max.max(1), params.rho)?;
    let results = (1..=n_max)
        .into_par_iter()
        .map(|n| solve_validated(n, params, &econ))
        .collect::<Result<Vec<_>>>()?;

    let game_type = econ.classify(MEAN_GAME_TOL);
    let strict = params.rho < 1.0;
    let mut report = MonotonicityReport { game_type: Some(game_type), strict, ..Default::default() };
    let expected_sign = match game_type {
        GameType::OverMean => 1.0,
        GameType::UnderMean => -1.0,
        GameType::Mean => 0.0,
    };
    for (idx, res) in results.iter().enumerate() {
        let sign = if res.y > 0.0 {
            1.0
        } else if res.y < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sign != expected_sign {
            report.sign_violations.push(res.n);
        }
        if idx == 0 {
            continue;
        }
        let prev = &results[idx - 1];
        let (y_ok, pooled_ok) = match (game_type, strict) {
            (GameType::Mean, _) => (res.y == 0.0, res.pooled_y() == 0.0),
            (_, false) => (res.y == prev.y, res.pooled_y() == prev.pooled_y()),
            (GameType::OverMean, true) => (res.y < prev.y, res.pooled_y() > prev.pooled_y()),
            (GameType::UnderMean, true) => (res.y > prev.y, res.pooled_y() < prev.pooled_y()),
        };
        if !y_ok {
            report.y_violations.push(res.n);
        }
        if !pooled_ok {
            report.pooled_violations.push(res.n);
        }
    }
    Ok(QuantitySequence { results, report })
}

/// One row of a transport-cost or coalition-size sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    #[serde(rename = "Y_n")]
    pub y: f64,
    #[serde(rename = "Phi_Y_n")]
    pub phi_y: f64,
    #[serde(rename = "J_dot_n")]
    pub j_dot: f64,
    #[serde(rename = "beta_n")]
    pub beta: f64,
    #[serde(rename = "omega_n")]
    pub omega: f64,
    /// Present only for independent demands (`rho = 0`).
    #[serde(rename = "Y_inf")]
    pub y_inf: Option<f64>,
}

fn sweep_row(x: f64, n: u64, params: &MarketParams) -> Result<SweepRow> {
    let res = solve_optimal_quantity(n, params)?;
    let y_inf = if params.rho == 0.0 { Some(limit_analysis(params)?.y_inf.get()) } else { None };
    Ok(SweepRow {
        x,
        y: res.y,
        phi_y: res.no_shortage_prob,
        j_dot: res.j_dot,
        beta: res.beta,
        omega: res.omega,
        y_inf,
    })
}

/// Evaluates a coalition of size `n` at each transport cost in `costs`.
/// Rows come back in input order.
pub fn sweep_transport_cost(params: &MarketParams, n: u64, costs: &[f64]) -> Result<Vec<SweepRow>> {
    costs
        .par_iter()
        .map(|&t| sweep_row(t, n, &MarketParams { t, ..*params }))
        .collect()
}

/// Evaluates each coalition size in `sizes`. Rows come back in input order.
pub fn sweep_coalition_size(params: &MarketParams, sizes: &[u64]) -> Result<Vec<SweepRow>> {
    sizes.par_iter().map(|&n| sweep_row(n as f64, n, params)).collect()
}
