use thiserror::Error;

/// A violated market-parameter inequality.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("invalid parameters: nu = {nu}, c = {c} violates nu < c < r")]
    SalvageNotBelowCost { nu: f64, c: f64 },
    #[error("invalid parameters: c = {c}, r = {r} violates nu < c < r")]
    CostNotBelowPrice { c: f64, r: f64 },
    #[error("invalid parameters: t = {t} violates t >= 0")]
    NegativeTransport { t: f64 },
    #[error("invalid parameters: t = {t} violates t < r - nu = {bound}")]
    TransportTooHigh { t: f64, bound: f64 },
    #[error("invalid parameters: sigma = {sigma} violates sigma > 0")]
    NonPositiveSigma { sigma: f64 },
    #[error("invalid parameters: rho = {rho} violates -1 < rho <= 1")]
    CorrelationOutOfRange { rho: f64 },
    #[error("invalid parameters: {name} is not finite")]
    NonFinite { name: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityDomain(f64),
    #[error("coalition size must be at least 1")]
    EmptyCoalition,
    #[error("rho = {rho} is not a valid correlation for {n} agents (need rho > {bound})")]
    CorrelationBound { rho: f64, n: u64, bound: f64 },
    #[error("root not bracketed on [{lo}, {hi}]: residuals {f_lo} and {f_hi}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("limit analysis supports rho = 0 only (got rho = {rho}); for rho > 0 the pooling factor stays bounded, use the finite-correlation diagnostic")]
    UnsupportedRegime { rho: f64 },
    #[error("finite-correlation limit needs 0 < rho <= 1 (got rho = {0})")]
    FiniteLimitDomain(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("at least {required} scenarios required, got {count}")]
    TooFewScenarios { count: usize, required: usize },
    #[error("grid needs an odd number of points >= 3, got {0}")]
    InvalidGrid(usize),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("missing parameter {0}")]
    MissingParameter(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
