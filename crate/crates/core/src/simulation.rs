//! Correlated normal demand sampling and Monte Carlo estimates of the
//! stochastic program, used to validate the closed forms.
//!
//! Scenarios are generated in blocks of [`BLOCK_ROWS`] rows. Block `b` draws
//! from ChaCha8 seeded with the user seed on stream `b`, so the matrix is
//! bit-identical for a given seed regardless of how many worker threads run.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_correlation, validate_params, MarketParams};
use crate::recourse::{symmetric_recourse_value, SurplusShortage};
use crate::solver::expected_profit;

/// Identifier of the generator recorded alongside simulation output.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-block/rand_distr-ziggurat-normal";
pub const BLOCK_ROWS: usize = 4096;
pub const DEFAULT_COUNT: usize = 100_000;

/// `count` joint demand draws for `n` agents, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    n: usize,
    count: usize,
    seed: u64,
    rho: f64,
    values: Vec<f64>,
}

impl DemandMatrix {
    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    /// Writes `scenario_id,D_1,...,D_n` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "scenario_id")?;
        for i in 1..=self.n {
            write!(out, ",D_{i}")?;
        }
        writeln!(out)?;
        for (k, row) in self.rows().enumerate() {
            write!(out, "{k}")?;
            for d in row {
                write!(out, ",{d}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Lower-triangular factor of `(1 - rho) I + rho 1 1^T`.
fn equicorrelation_factor(n: usize, rho: f64) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { rho };
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                l[i * n + i] = (target - dot).max(0.0).sqrt();
            } else {
                l[i * n + j] = (target - dot) / l[j * n + j];
            }
        }
    }
    l
}

/// Draws `count` scenarios from the `n`-variate normal with mean `mu`, standard
/// deviation `sigma` and common pairwise correlation `rho`.
pub fn sample_demands(n: usize, mu: f64, sigma: f64, rho: f64, count: usize, seed: u64) -> Result<DemandMatrix> {
    check_correlation(n as u64, rho)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(crate::error::ParamError::NonPositiveSigma { sigma }.into());
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite(mu));
    }
    if count == 0 {
        return Err(Error::TooFewScenarios { count, required: 1 });
    }
    let factor = equicorrelation_factor(n, rho);
    let mut values = vec![0.0; n * count];
    values.par_chunks_mut(BLOCK_ROWS * n).enumerate().for_each(|(block, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let mut z = vec![0.0; n];
        for row in chunk.chunks_exact_mut(n) {
            if rho == 1.0 {
                let common: f64 = StandardNormal.sample(&mut rng);
                row.fill(mu + sigma * common);
                continue;
            }
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for (i, d) in row.iter_mut().enumerate() {
                let mixed: f64 = factor[i * n..i * n + i + 1].iter().zip(&z).map(|(a, b)| a * b).sum();
                *d = mu + sigma * mixed;
            }
        }
    });
    Ok(DemandMatrix { n, count, seed, rho, values })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Self { count, mean, m2 }
    }
}

/// Evaluates `per_scenario` on every row in fixed blocks and merges the block
/// moments in order, so the result does not depend on scheduling.
fn estimate<F>(samples: &DemandMatrix, per_scenario: F) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples.count < 2 {
        return Err(Error::TooFewScenarios { count: samples.count, required: 2 });
    }
    let blocks: Vec<Moments> = samples
        .values
        .par_chunks(BLOCK_ROWS * samples.n)
        .map(|chunk| {
            let mut m = Moments::default();
            for row in chunk.chunks_exact(samples.n) {
                m.push(per_scenario(row));
            }
            m
        })
        .collect();
    let total = blocks.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.count - 1) as f64;
    Ok(McEstimate {
        mean: total.mean,
        std_error: (variance / total.count as f64).sqrt(),
        count: total.count,
    })
}

/// Coalition profit for one demand realization with common order quantity `x`.
pub fn scenario_profit(x: f64, demands: &[f64], params: &MarketParams, transship_profit: f64) -> f64 {
    let mut own = 0.0;
    let mut surplus = 0.0;
    let mut shortage = 0.0;
    for &d in demands {
        let h = (x - d).max(0.0);
        surplus += h;
        shortage += (d - x).max(0.0);
        own += params.r * x.min(d) + params.nu * h - params.c * x;
    }
    own + transship_profit * surplus.min(shortage)
}

fn scenario_transshipment(x: f64, demands: &[f64]) -> f64 {
    let mut surplus = 0.0;
    let mut shortage = 0.0;
    for &d in demands {
        surplus += (x - d).max(0.0);
        shortage += (d - x).max(0.0);
    }
    surplus.min(shortage)
}

/// Sample-average estimate of the coalition's expected profit when every
/// member orders `x`.
pub fn estimate_profit(x: f64, samples: &DemandMatrix, params: &MarketParams) -> Result<McEstimate> {
    let econ = validate_params(params)?;
    estimate(samples, |row| scenario_profit(x, row, params, econ.p))
}

/// Sample-average estimate of `E[min(sum H, sum E)]`.
pub fn estimate_transshipment(x: f64, samples: &DemandMatrix) -> Result<McEstimate> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    estimate(samples, |row| scenario_transshipment(x, row))
}

/// Recourse value of one scenario through the identical-agent shortcut.
pub fn scenario_recourse(x: f64, demands: &[f64], transship_profit: f64) -> Result<f64> {
    let quantities = vec![x; demands.len()];
    let ss = SurplusShortage::from_realization(&quantities, demands)?;
    Ok(symmetric_recourse_value(&ss, transship_profit))
}

/// Best point of a uniform grid over `[mu - w sigma, mu + w sigma]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub x: f64,
    pub value: f64,
    pub spacing: f64,
}

/// Grid search of the closed-form expected profit; an oracle for the root
/// finder.
pub fn brute_force_optimal(
    params: &MarketParams,
    n: u64,
    grid_half_width: f64,
    grid_points: usize,
) -> Result<GridOptimum> {
    if grid_points < 3 || grid_points.is_multiple_of(2) {
        return Err(Error::InvalidGrid(grid_points));
    }
    validate_params(params)?;
    let lo = params.mu - grid_half_width * params.sigma;
    let spacing = 2.0 * grid_half_width * params.sigma / (grid_points - 1) as f64;
    let mut best = GridOptimum { x: lo, value: f64::NEG_INFINITY, spacing };
    for k in 0..grid_points {
        let x = lo + k as f64 * spacing;
        let value = expected_profit(x, n, params)?;
        if value > best.value {
            best.x = x;
            best.value = value;
        }
    }
    Ok(best)
}
