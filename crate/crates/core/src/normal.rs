//! Standard normal primitives.
//!
//! The cdf is evaluated through `erfc` so the lower tail keeps full relative
//! precision; `cdf_centered` goes through `erf` and is accurate near zero,
//! which is where the optimality condition of near-mean games lives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::ProbabilityDomain(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A quantity measured in demand standard deviations from the mean.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StandardizedQuantity(f64);

impl StandardizedQuantity {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::NonFinite(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Density φ(y).
pub fn std_pdf(y: StandardizedQuantity) -> f64 {
    pdf(y.0)
}

/// Distribution function Φ(y).
pub fn std_cdf(y: StandardizedQuantity) -> Probability {
    Probability(cdf(y.0))
}

/// Quantile Φ⁻¹(p) for `0 < p < 1`.
pub fn std_inv_cdf(p: Probability) -> Result<StandardizedQuantity> {
    let p = p.0;
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::ProbabilityDomain(p));
    }
    Ok(StandardizedQuantity(inv_cdf(p)))
}

/// `∫_{-∞}^{y} Φ(ξ) dξ = y Φ(y) + φ(y)`.
pub fn cdf_antiderivative(y: StandardizedQuantity) -> f64 {
    antiderivative(y.0)
}

#[inline]
pub(crate) fn pdf(y: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * y * y).exp()
}

#[inline]
pub(crate) fn cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

/// Φ(y) − 1/2.
#[inline]
pub(crate) fn cdf_centered(y: f64) -> f64 {
    0.5 * libm::erf(y * FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn antiderivative(y: f64) -> f64 {
    // Below -38 both terms underflow; the sum is zero in double precision.
    if y < -38.5 {
        return 0.0;
    }
    (y * cdf(y) + pdf(y)).max(0.0)
}

/// Acklam's rational guess refined by two Newton steps. Expects `0 < p < 1`.
pub(crate) fn inv_cdf(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact here, and the odd symmetry is preserved bit for bit.
        return -inv_cdf_lower(1.0 - p);
    }
    inv_cdf_lower(p)
}

fn inv_cdf_lower(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    for _ in 0..2 {
        let density = pdf(x);
        if density == 0.0 {
            break;
        }
        let err = if p >= 0.25 {
            // p - 0.5 is exact for p in [0.25, 0.5]
            cdf_centered(x) - (p - 0.5)
        } else {
            cdf(x) - p
        };
        x -= err / density;
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
