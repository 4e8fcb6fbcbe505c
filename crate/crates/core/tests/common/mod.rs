#![allow(dead_code)]

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transship_core::MarketParams;

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

/// Random surplus/shortage split: each agent is either a sender or a receiver.
pub fn random_roles<T>(rng: &mut ChaCha8Rng, n: usize, mut draw: impl FnMut(&mut ChaCha8Rng) -> T) -> (Vec<T>, Vec<T>)
where
    T: Default,
{
    let mut h = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for _ in 0..n {
        let q = draw(rng);
        if rng.random_bool(0.5) {
            h.push(q);
            e.push(T::default());
        } else {
            h.push(T::default());
            e.push(q);
        }
    }
    (h, e)
}

/// Best objective over every integral plan with `W_ij <= min(H_i, E_j)`.
pub fn enumerate_best_plan(h: &[u32], e: &[u32], p: &[Vec<i64>]) -> i64 {
    let n = h.len();
    let routes: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| h[i] > 0 && e[j] > 0)
        .collect();
    let mut best = 0;
    let mut flows = vec![0u32; routes.len()];
    loop {
        let mut out = vec![0u32; n];
        let mut inflow = vec![0u32; n];
        for (&(i, j), &w) in routes.iter().zip(&flows) {
            out[i] += w;
            inflow[j] += w;
        }
        if (0..n).all(|k| out[k] <= h[k] && inflow[k] <= e[k]) {
            let value: i64 = routes.iter().zip(&flows).map(|(&(i, j), &w)| p[i][j] * w as i64).sum();
            best = best.max(value);
        }
        // odometer over W_ij in 0..=min(H_i, E_j)
        let mut k = 0;
        loop {
            if k == routes.len() {
                return best;
            }
            let (i, j) = routes[k];
            if flows[k] < h[i].min(e[j]) {
                flows[k] += 1;
                break;
            }
            flows[k] = 0;
            k += 1;
        }
    }
}
