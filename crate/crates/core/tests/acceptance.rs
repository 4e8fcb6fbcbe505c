//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any
//! failure. Runs under `cargo test` as a harness-less test target.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use transship_core::normal::{std_inv_cdf, std_pdf};
use transship_core::{
    brute_force_optimal, check_equal_allocation_core, demand_feasibility_check, estimate_profit,
    estimate_transshipment, expected_profit, expected_transshipment, limit_analysis,
    quantity_sequence, sample_demands, solve_optimal_quantity, solve_transshipment_plan,
    symmetric_recourse_value, validate_params, CutRegime, GameType, MarketParams, Probability,
    ProfitMatrix, StandardizedQuantity, SurplusShortage,
};

use common::{enumerate_best_plan, random_params, random_roles, seeded};

type Outcome = Result<String, String>;
/// Label, name, time limit and check.
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

const P_OVER: MarketParams = MarketParams { r: 10.0, c: 4.0, nu: 2.0, t: 1.0, mu: 100.0, sigma: 20.0, rho: 0.0 };
const P_UNDER: MarketParams = MarketParams { r: 10.0, c: 8.0, nu: 2.0, t: 2.0, mu: 100.0, sigma: 20.0, rho: 0.0 };
const P_MEAN: MarketParams = MarketParams { r: 10.0, c: 6.0, nu: 2.0, t: 2.0, mu: 100.0, sigma: 20.0, rho: 0.0 };

fn sq(y: f64) -> StandardizedQuantity {
    StandardizedQuantity::new(y).expect("finite")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_newsvendor_reduction() -> Outcome {
    let mut rng = seeded(101);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let p = random_params(&mut rng, 0.0..1.0);
        let econ = validate_params(&p).map_err(|e| e.to_string())?;
        let y1 = solve_optimal_quantity(1, &p).map_err(|e| e.to_string())?.y;
        let q = std_inv_cdf(Probability::new(econ.fractile).unwrap()).unwrap().get();
        worst = worst.max((y1 - q).abs());
    }
    ensure(worst <= 1e-10, || format!("max |Y_1 - inv_cdf(R)| = {worst:e}"))?;
    Ok(format!("max |Y_1 - inv_cdf(R)| = {worst:.2e} over 50 sets"))
}

fn c2_sign_and_monotonicity() -> Outcome {
    let mut rng = seeded(102);
    let mut violations = 0;
    let mut counts = [0usize; 3];
    for _ in 0..100 {
        let p = random_params(&mut rng, 0.0..0.9);
        let seq = quantity_sequence(&p, 200).map_err(|e| e.to_string())?;
        let report = &seq.report;
        match report.game_type {
            Some(GameType::OverMean) => counts[0] += 1,
            Some(GameType::UnderMean) => counts[1] += 1,
            _ => counts[2] += 1,
        }
        if !report.holds() {
            violations += 1;
            eprintln!("  violation for {p:?}: {report:?}");
        }
        let sign1 = seq.results[0].y.signum();
        if seq.results.iter().any(|r| r.y.signum() != sign1) {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} parameter sets violated"))?;
    Ok(format!(
        "0 violations over 100 sets x n=1..200 ({} over-mean, {} under-mean, {} mean)",
        counts[0], counts[1], counts[2]
    ))
}

fn c3_limit_convergence() -> Outcome {
    let regimes = [
        ("P-over t=1", MarketParams { t: 1.0, ..P_OVER }, CutRegime::BelowCut),
        ("P-over t=6", MarketParams { t: 6.0, ..P_OVER }, CutRegime::AtOrAboveCut),
        ("P-under t=2", MarketParams { t: 2.0, ..P_UNDER }, CutRegime::BelowCut),
        ("P-under t=6", MarketParams { t: 6.0, ..P_UNDER }, CutRegime::AtOrAboveCut),
    ];
    let mut finals = Vec::new();
    for (name, p, regime) in regimes {
        let limit = limit_analysis(&p).map_err(|e| e.to_string())?;
        ensure(limit.regime == regime, || format!("{name}: regime {:?}", limit.regime))?;
        let target = limit.phi_y_inf.get();
        let gaps: Vec<f64> = (1..=6)
            .map(|k| {
                let res = solve_optimal_quantity(10u64.pow(k), &p).expect("solvable");
                (res.no_shortage_prob - target).abs()
            })
            .collect();
        // Strictly decreasing until the gap drops below double precision,
        // after which it must stay exactly zero.
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
        ensure(decreasing, || format!("{name}: gaps not decreasing {gaps:?}"))?;
        ensure(gaps[5] <= 1e-2, || format!("{name}: gap at n=1e6 is {}", gaps[5]))?;
        finals.push(format!("{name}: {:.1e}", gaps[5]));
    }
    Ok(format!("|Phi(Y_n) - Phi(Y_inf)| at n=1e6 -> {}", finals.join(", ")))
}

fn c4_cut_continuity() -> Outcome {
    let mut notes = Vec::new();
    for (name, base) in [("under-mean", P_UNDER), ("over-mean", P_OVER)] {
        let econ = validate_params(&base).map_err(|e| e.to_string())?;
        let spread = base.r - base.nu;
        let steps = 200;
        let to = spread * (1.0 - 1e-3);
        let dt = to / (steps - 1) as f64;
        let ts: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
        let rows = transship_core::solver::sweep_transport_cost(&base, 10, &ts).map_err(|e| e.to_string())?;
        let y_inf: Vec<f64> = rows.iter().map(|r| r.y_inf.expect("rho = 0")).collect();
        let cut = if name == "under-mean" { 2.0 * econ.g } else { 2.0 * econ.g_tilde };
        let side = if name == "under-mean" { econ.g } else { econ.g_tilde };

        // |dY_inf/dt| on the saturated branch is side / (t^2 phi(Y_inf)).
        let slope = |t: f64, y: f64| side / (t * t * std_pdf(sq(y)));
        let mut bound = slope(cut, 0.0);
        for (t, y) in ts.iter().zip(&y_inf) {
            if *t >= cut {
                bound = bound.max(slope(*t, *y));
            }
        }
        let max_jump = y_inf.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        ensure(max_jump <= bound * dt * (1.0 + 1e-9), || {
            format!("{name}: jump {max_jump} exceeds step resolution {}", bound * dt)
        })?;
        for (t, y) in ts.iter().zip(&y_inf) {
            let ok = if *t < cut {
                *y == 0.0
            } else if name == "under-mean" {
                *y <= 0.0
            } else {
                *y >= 0.0
            };
            ensure(ok, || format!("{name}: Y_inf = {y} at t = {t} has the wrong shape"))?;
        }
        notes.push(format!("{name}: max step {max_jump:.4} <= {:.4}", bound * dt));
    }
    Ok(notes.join("; "))
}

fn mc_bands(p: &MarketParams, n: u64, seed: u64) -> Result<[bool; 2], String> {
    let res = solve_optimal_quantity(n, p).map_err(|e| e.to_string())?;
    let samples = sample_demands(n as usize, p.mu, p.sigma, p.rho, 100_000, seed).map_err(|e| e.to_string())?;
    let profit = estimate_profit(res.x, &samples, p).map_err(|e| e.to_string())?;
    let closed_profit = expected_profit(res.x, n, p).map_err(|e| e.to_string())?;
    let ship = estimate_transshipment(res.x, &samples).map_err(|e| e.to_string())?;
    let closed_ship = expected_transshipment(sq(res.y), n, p).map_err(|e| e.to_string())?;
    Ok([profit.covers(closed_profit, 4.0), ship.covers(closed_ship, 4.0)])
}

fn c5_monte_carlo_agreement() -> Outcome {
    let mut rng = seeded(105);
    let mut failures = 0;
    let mut unresolved = 0;
    for idx in 0..20u64 {
        let p = random_params(&mut rng, 0.0..0.8);
        let n = rng.random_range(1..=8u64);
        let seed = 5_000 + idx;
        let bands = mc_bands(&p, n, seed)?;
        let failed: Vec<usize> = (0..2).filter(|&b| !bands[b]).collect();
        if failed.is_empty() {
            continue;
        }
        failures += failed.len();
        let retry = mc_bands(&p, n, seed + 1_000_000)?;
        unresolved += failed.iter().filter(|&&b| !retry[b]).count();
    }
    ensure(failures <= 1 && unresolved == 0, || {
        format!("{failures} of 40 bands failed, {unresolved} still failing after re-seed")
    })?;
    let retried = if failures == 0 { "" } else { ", recovered on re-seed" };
    Ok(format!("{failures} of 40 4-sigma bands missed on first seed{retried}"))
}

fn c6_brute_force_oracle() -> Outcome {
    let mut rng = seeded(106);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let p = random_params(&mut rng, 0.0..1.0);
        for n in [1u64, 2, 5, 20] {
            let res = solve_optimal_quantity(n, &p).map_err(|e| e.to_string())?;
            let grid = brute_force_optimal(&p, n, 6.0, 20_001).map_err(|e| e.to_string())?;
            let ratio = (grid.x - res.x).abs() / grid.spacing;
            worst = worst.max(ratio);
            ensure(ratio <= 1.0 + 1e-9, || format!("{p:?} n={n}: grid {} vs root {}", grid.x, res.x))?;
            ensure(grid.value <= res.j_dot + 1e-9, || format!("grid beat the optimum for {p:?} n={n}"))?;
        }
    }
    Ok(format!("max |X_grid - X_n| = {worst:.3} grid spacings over 200 cases"))
}

fn c7_recourse_optimality() -> Outcome {
    let mut rng = seeded(107);
    for case in 0..1000 {
        let n = rng.random_range(1..=4usize);
        let (h, e) = random_roles(&mut rng, n, |r| r.random_range(0..=3u32));
        let p: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-5..=10i64)).collect()).collect();
        let ss = SurplusShortage::new(h.iter().map(|&v| v as f64).collect(), e.iter().map(|&v| v as f64).collect())
            .map_err(|e| e.to_string())?;
        let profit = ProfitMatrix::from_rows(p.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect())
            .map_err(|e| e.to_string())?;
        let plan = solve_transshipment_plan(&ss, &profit).map_err(|e| e.to_string())?;
        let best = enumerate_best_plan(&h, &e, &p) as f64;
        ensure(plan.objective == best, || {
            format!("case {case}: solver {} vs enumeration {best} (H={h:?}, E={e:?}, p={p:?})", plan.objective)
        })?;
    }

    // Uniform profits on real-valued instances. Quantities are drawn on a
    // 2^-20 grid below 64, so every sum is exact and equality is bit-for-bit.
    let mut worst_rel = 0.0_f64;
    for case in 0..1000 {
        let n = rng.random_range(1..=10usize);
        let (h, e) = random_roles(&mut rng, n, |r| (r.random_range(0.0..64.0) * 1_048_576.0_f64).floor() / 1_048_576.0);
        let unit = (rng.random_range(0.5..10.0) * 1024.0_f64).floor() / 1024.0;
        let ss = SurplusShortage::new(h, e).map_err(|e| e.to_string())?;
        let plan = solve_transshipment_plan(&ss, &ProfitMatrix::uniform(n, unit)).map_err(|e| e.to_string())?;
        let shortcut = symmetric_recourse_value(&ss, unit);
        ensure(plan.objective == shortcut, || format!("case {case}: {} vs {shortcut}", plan.objective))?;
    }
    // Arbitrary doubles: equal up to floating-point summation order.
    for case in 0..1000 {
        let n = rng.random_range(1..=10usize);
        let (h, e) = random_roles(&mut rng, n, |r| r.random_range(0.0..50.0));
        let unit = rng.random_range(0.5..10.0);
        let ss = SurplusShortage::new(h, e).map_err(|e| e.to_string())?;
        let plan = solve_transshipment_plan(&ss, &ProfitMatrix::uniform(n, unit)).map_err(|e| e.to_string())?;
        let shortcut = symmetric_recourse_value(&ss, unit);
        let rel = (plan.objective - shortcut).abs() / shortcut.abs().max(1.0);
        worst_rel = worst_rel.max(rel);
        ensure(rel <= 1e-12, || format!("case {case}: {} vs {shortcut}", plan.objective))?;
    }
    Ok(format!(
        "1000 integer instances match enumeration exactly; 1000 dyadic uniform instances exact; \
         1000 arbitrary uniform instances within {worst_rel:.1e} relative"
    ))
}

fn core_sets() -> Vec<MarketParams> {
    let mut rng = seeded(108);
    (0..100).map(|_| random_params(&mut rng, 0.0..1.0)).collect()
}

fn c8_core_check() -> Outcome {
    let mut smallest = f64::INFINITY;
    for p in core_sets() {
        let report = check_equal_allocation_core(&p, 50, 1e-9).map_err(|e| e.to_string())?;
        let scale = report.beta.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1.0);
        let rel = report.worst_margin / scale;
        smallest = smallest.min(rel);
        ensure(report.in_core && rel >= -1e-9, || format!("{p:?}: {report:?}"))?;
    }
    Ok(format!("100 sets in core at n=50, smallest relative margin {smallest:.3e}"))
}

fn c9_allocation_consistency() -> Outcome {
    let mut worst = 0.0_f64;
    for p in core_sets() {
        for n in 1..=50u64 {
            let res = solve_optimal_quantity(n, &p).map_err(|e| e.to_string())?;
            let beta = transship_core::equal_allocation(n, &p).map_err(|e| e.to_string())?;
            let direct = expected_profit(res.x, n, &p).map_err(|e| e.to_string())?;
            let rel = (n as f64 * beta - direct).abs() / direct.abs().max(1e-300);
            worst = worst.max(rel);
        }
    }
    ensure(worst <= 1e-9, || format!("max relative gap {worst:e}"))?;
    Ok(format!("max |n beta_n - J_n(X_n)| / |J_n(X_n)| = {worst:.2e}"))
}

fn c10_cv_warning() -> Outcome {
    let bad = demand_feasibility_check(&MarketParams { mu: 10.0, ..P_MEAN }).map_err(|e| e.to_string())?;
    let good = demand_feasibility_check(&P_MEAN).map_err(|e| e.to_string())?;
    ensure(!bad.feasible && good.feasible, || format!("{bad:?} / {good:?}"))?;
    Ok(format!("bound {:.5}: CV 2 flagged, CV 0.2 accepted", good.bound))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1", "newsvendor reduction", Duration::from_secs(1), c1_newsvendor_reduction),
        ("2", "sign preservation and monotone sequences", Duration::from_secs(10), c2_sign_and_monotonicity),
        ("3", "convergence to the limit table", Duration::from_secs(1), c3_limit_convergence),
        ("4", "continuity of Y_inf across the cut", Duration::from_secs(1), c4_cut_continuity),
        ("5", "closed form vs Monte Carlo", Duration::from_secs(60), c5_monte_carlo_agreement),
        ("6", "brute-force grid oracle", Duration::from_secs(30), c6_brute_force_oracle),
        ("7", "recourse optimality", Duration::from_secs(30), c7_recourse_optimality),
        ("8", "equal allocation in the core", Duration::from_secs(30), c8_core_check),
        ("9", "equal allocation consistency", Duration::from_secs(30), c9_allocation_consistency),
        ("10", "CV feasibility warning", Duration::from_secs(1), c10_cv_warning),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail} (took {elapsed:?}, limit {limit:?})")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} [{name}] ({:.2}s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id:>2} [{name}] ({:.2}s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
