use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::MarketParams;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A valid parameter set with the critical fractile roughly in [0.1, 0.9].
pub fn random_params(rng: &mut ChaCha8Rng, rho: Range<f64>) -> MarketParams {
    let nu = rng.random_range(0.0..5.0);
    let c = nu + rng.random_range(1.0..10.0);
    let r = c + rng.random_range(1.0..10.0);
    let t = rng.random_range(0.0..0.95) * (r - nu);
    let mu = rng.random_range(50.0..200.0);
    let sigma = mu * rng.random_range(0.05..0.4);
    let rho = if rho.start < rho.end { rng.random_range(rho) } else { rho.start };
    MarketParams { r, c, nu, t, mu, sigma, rho }
}
