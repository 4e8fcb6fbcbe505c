//! Market parameters, derived economics and game classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamError, Result};
use crate::normal;

/// Default tolerance on `|R - 1/2|` below which a game counts as a mean game.
pub const MEAN_GAME_TOL: f64 = 1e-12;

/// Economic and demand parameters shared by every identical newsvendor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Selling price per unit.
    pub r: f64,
    /// Purchasing cost per unit.
    pub c: f64,
    /// Salvage value per unit.
    pub nu: f64,
    /// Transport cost per transshipped unit.
    pub t: f64,
    /// Demand mean.
    pub mu: f64,
    /// Demand standard deviation.
    pub sigma: f64,
    /// Pairwise demand correlation.
    pub rho: f64,
}

/// Quantities derived from [`MarketParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedEconomics {
    /// Benefit of selling a unit, `r - c`.
    pub g: f64,
    /// Benefit of avoiding a salvage markdown, `c - nu`.
    pub g_tilde: f64,
    /// Marginal transshipment profit, `r - nu - t`.
    pub p: f64,
    /// Critical fractile `(r - c) / (r - nu)`.
    pub fractile: f64,
    /// `t / (r - nu)`.
    pub gamma: f64,
    /// `1 - gamma`.
    pub gamma_tilde: f64,
}

impl DerivedEconomics {
    /// `g + g_tilde = r - nu`.
    pub fn margin(&self) -> f64 {
        self.g + self.g_tilde
    }

    /// `R - 1/2`, computed without cancellation.
    pub fn fractile_offset(&self) -> f64 {
        0.5 * (self.g - self.g_tilde) / (self.g + self.g_tilde)
    }

    pub fn classify(&self, tol: f64) -> GameType {
        classify_game(self, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameType {
    OverMean,
    UnderMean,
    Mean,
}

impl fmt::Display for GameType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameType::OverMean => "over-mean",
            GameType::UnderMean => "under-mean",
            GameType::Mean => "mean",
        })
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<DerivedEconomics, ParamError> {
        validate_params(self)
    }
}

/// Checks every parameter inequality and returns the derived economics.
pub fn validate_params(params: &MarketParams) -> Result<DerivedEconomics, ParamError> {
    let MarketParams { r, c, nu, t, mu, sigma, rho } = *params;
    for (name, v) in [
        ("r", r),
        ("c", c),
        ("nu", nu),
        ("t", t),
        ("mu", mu),
        ("sigma", sigma),
        ("rho", rho),
    ] {
        if !v.is_finite() {
            return Err(ParamError::NonFinite { name });
        }
    }
    if nu >= c {
        return Err(ParamError::SalvageNotBelowCost { nu, c });
    }
    if c >= r {
        return Err(ParamError::CostNotBelowPrice { c, r });
    }
    if t < 0.0 {
        return Err(ParamError::NegativeTransport { t });
    }
    let spread = r - nu;
    if t >= spread {
        return Err(ParamError::TransportTooHigh { t, bound: spread });
    }
    if sigma <= 0.0 {
        return Err(ParamError::NonPositiveSigma { sigma });
    }
    if rho <= -1.0 || rho > 1.0 {
        return Err(ParamError::CorrelationOutOfRange { rho });
    }

    let g = r - c;
    let g_tilde = c - nu;
    let gamma = t / spread;
    Ok(DerivedEconomics {
        g,
        g_tilde,
        p: spread - t,
        fractile: g / spread,
        gamma,
        gamma_tilde: 1.0 - gamma,
    })
}

pub fn classify_game(econ: &DerivedEconomics, tol: f64) -> GameType {
    let offset = econ.fractile_offset();
    if offset.abs() <= tol {
        GameType::Mean
    } else if offset > 0.0 {
        GameType::OverMean
    } else {
        GameType::UnderMean
    }
}

/// Smallest admissible correlation for `n` equicorrelated agents (exclusive).
pub fn correlation_lower_bound(n: u64) -> f64 {
    if n <= 1 {
        -1.0
    } else {
        -1.0 / (n - 1) as f64
    }
}

pub(crate) fn check_correlation(n: u64, rho: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyCoalition);
    }
    let bound = correlation_lower_bound(n);
    if !(rho > bound && rho <= 1.0) {
        return Err(Error::CorrelationBound { rho, n, bound });
    }
    Ok(())
}

/// `L_n = sqrt(n / (1 + (n - 1) rho))`.
pub fn pooling_factor(n: u64, rho: f64) -> Result<f64> {
    check_correlation(n, rho)?;
    if n == 1 {
        return Ok(1.0);
    }
    let n_f = n as f64;
    Ok((n_f / (1.0 + (n_f - 1.0) * rho)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `sigma / mu`, absent when `mu <= 0`.
    pub cv: Option<f64>,
    /// `g / ((g + g_tilde) phi(Phi^-1(R)))`.
    pub bound: f64,
    pub reason: String,
}

/// Coefficient-of-variation condition under which the untruncated normal
/// model keeps coalition values non-negative.
pub fn demand_feasibility_check(params: &MarketParams) -> Result<FeasibilityReport> {
    let econ = validate_params(params)?;
    let y1 = normal::inv_cdf(econ.fractile);
    let bound = econ.g / (econ.margin() * normal::pdf(y1));
    if params.mu <= 0.0 {
        return Ok(FeasibilityReport {
            feasible: false,
            cv: None,
            bound,
            reason: format!("mu = {} must be positive for the CV condition", params.mu),
        });
    }
    let cv = params.sigma / params.mu;
    let feasible = cv <= bound;
    let reason = if feasible {
        format!("sigma/mu = {cv} <= {bound}")
    } else {
        format!("sigma/mu = {cv} > {bound}: negative demand is non-negligible")
    };
    Ok(FeasibilityReport { feasible, cv: Some(cv), bound, reason })
}

/// Parameters gathered from a config file or command-line flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamOverrides {
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub nu: Option<f64>,
    pub t: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
}

impl ParamOverrides {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| Error::Config {
                line: line_no,
                message: format!("cannot parse {:?} as a number", value.trim()),
            })?;
            let slot = match key {
                "r" => &mut out.r,
                "c" => &mut out.c,
                "nu" => &mut out.nu,
                "t" => &mut out.t,
                "mu" => &mut out.mu,
                "sigma" => &mut out.sigma,
                "rho" => &mut out.rho,
                other => {
                    return Err(Error::Config {
                        line: line_no,
                        message: format!("unknown key {other:?}"),
                    })
                }
            };
            *slot = Some(value);
        }
        Ok(out)
    }

    /// Values set in `other` win.
    pub fn overridden_by(self, other: Self) -> Self {
        Self {
            r: other.r.or(self.r),
            c: other.c.or(self.c),
            nu: other.nu.or(self.nu),
            t: other.t.or(self.t),
            mu: other.mu.or(self.mu),
            sigma: other.sigma.or(self.sigma),
            rho: other.rho.or(self.rho),
        }
    }

    /// Builds the parameter record; `rho` defaults to 0. Does not validate.
    pub fn build(self) -> Result<MarketParams> {
        Ok(MarketParams {
            r: self.r.ok_or(Error::MissingParameter("r"))?,
            c: self.c.ok_or(Error::MissingParameter("c"))?,
            nu: self.nu.ok_or(Error::MissingParameter("nu"))?,
            t: self.t.ok_or(Error::MissingParameter("t"))?,
            mu: self.mu.ok_or(Error::MissingParameter("mu"))?,
            sigma: self.sigma.ok_or(Error::MissingParameter("sigma"))?,
            rho: self.rho.unwrap_or(0.0),
        })
    }
}
