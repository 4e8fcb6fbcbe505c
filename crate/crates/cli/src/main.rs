//! `transship`: command-line front end for the transshipment game library.

mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use transship_core::core_check::DEFAULT_CORE_TOL;
use transship_core::simulation::{DEFAULT_COUNT, RNG_ALGORITHM};
use transship_core::solver::{finite_correlation_limit, sweep_coalition_size, sweep_transport_cost};
use transship_core::{
    check_equal_allocation_core, demand_feasibility_check, estimate_profit, estimate_transshipment,
    expected_profit, expected_transshipment, limit_analysis, sample_demands, solve_optimal_quantity,
    solve_transshipment_plan, validate_params, CutRegime, GameType, MarketParams, ParamOverrides,
    ProfitMatrix, StandardizedQuantity, SurplusShortage,
};

use output::{emit_record, emit_records, num, write_csv, write_json, write_key_values, write_table, Format};

/// Default seed for Monte Carlo runs.
const DEFAULT_SEED: u64 = 2011;
const THREADS_ENV: &str = "TRANSSHIP_THREADS";
/// Bands are judged at this many standard errors.
const MC_BAND: f64 = 4.0;

#[derive(Parser)]
#[command(name = "transship", version, about = "Transshipment games among identical newsvendors")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal order quantity and values for a coalition of size n.
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
    /// Evaluate a grid of transport costs or coalition sizes.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        over: SweepAxis,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of grid points including both ends. Defaults to 101 for
        /// `t` and to every integer for `n`.
        #[arg(long)]
        steps: Option<usize>,
        /// Coalition size for a transport-cost sweep.
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
    /// Limits of the optimal quantity as the coalition grows (rho = 0).
    Limits {
        #[command(flatten)]
        params: ParamArgs,
        /// For 0 < rho <= 1, report the numerical limit of Y_n instead.
        #[arg(long)]
        finite_correlation: bool,
    },
    /// Monte Carlo estimates against the closed forms.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long, default_value_t = DEFAULT_COUNT)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Per-agent order quantity; defaults to the optimum X_n.
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Write the sampled demand scenarios to this CSV file.
        #[arg(long)]
        dump_scenarios: Option<PathBuf>,
    },
    /// Test whether the equal allocation lies in the core.
    CoreCheck {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: u64,
        /// Relative tolerance for the coalition comparisons.
        #[arg(long, default_value_t = DEFAULT_CORE_TOL)]
        tol: f64,
    },
    /// Optimal transshipment plan for one realization.
    Recourse {
        /// CSV with header `agent,H,E` (surplus and shortage per agent).
        #[arg(long)]
        agents: PathBuf,
        /// Headerless CSV holding the n x n per-unit profit matrix.
        #[arg(long)]
        profit: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepAxis {
    T,
    N,
}

/// Market parameters from flags, optionally layered over a config file.
#[derive(Args)]
struct ParamArgs {
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Pairwise demand correlation (default 0).
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
}

impl ParamArgs {
    /// Merges, builds and validates; warns when the normal model is a poor fit.
    fn resolve(&self) -> anyhow::Result<MarketParams> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ParamOverrides::parse_config(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ParamOverrides::default(),
        };
        let flags = ParamOverrides {
            r: self.r,
            c: self.c,
            nu: self.nu,
            t: self.t,
            mu: self.mu,
            sigma: self.sigma,
            rho: self.rho,
        };
        let params = base.overridden_by(flags).build()?;
        validate_params(&params)?;
        let feasibility = demand_feasibility_check(&params)?;
        if !feasibility.feasible {
            eprintln!("warning: {}", feasibility.reason);
        }
        Ok(params)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = configure_threads().and_then(|()| run(cli, &mut out)).and_then(|()| Ok(out.flush()?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            drop(out);
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run<W: Write>(cli: Cli, out: &mut W) -> anyhow::Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Solve { params, n } => {
            let params = params.resolve()?;
            emit_record(out, format, &solve_optimal_quantity(n, &params)?)
        }
        Command::Sweep { params, over, from, to, steps, n } => {
            let params = params.resolve()?;
            let rows = match over {
                SweepAxis::T => sweep_transport_cost(&params, n, &linspace(from, to, steps.unwrap_or(101))?)?,
                SweepAxis::N => sweep_coalition_size(&params, &size_grid(from, to, steps)?)?,
            };
            emit_records(out, format, &rows)
        }
        Command::Limits { params, finite_correlation } => {
            let params = params.resolve()?;
            if finite_correlation {
                let y_inf = finite_correlation_limit(&params)?;
                let record = FiniteLimit { rho: params.rho, y_inf };
                emit_record(out, format, &record)
            } else {
                limits(out, format, &params)
            }
        }
        Command::Simulate { params, n, count, seed, x, dump_scenarios } => {
            let params = params.resolve()?;
            simulate(out, format, &params, n, count, seed, x, dump_scenarios.as_deref())
        }
        Command::CoreCheck { params, n, tol } => {
            let params = params.resolve()?;
            core_check(out, format, &params, n, tol)
        }
        Command::Recourse { agents, profit } => recourse(out, format, &agents, &profit),
    }
}

/// `steps` evenly spaced points from `from` to `to`, both ends included exactly.
fn linspace(from: f64, to: f64, steps: usize) -> anyhow::Result<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() {
        bail!("sweep bounds must be finite");
    }
    match steps {
        0 => bail!("--steps must be at least 1"),
        1 => Ok(vec![from]),
        _ => {
            let last = (steps - 1) as f64;
            Ok((0..steps).map(|k| if k == steps - 1 { to } else { from + (to - from) * k as f64 / last }).collect())
        }
    }
}

fn size_grid(from: f64, to: f64, steps: Option<usize>) -> anyhow::Result<Vec<u64>> {
    for v in [from, to] {
        if !(v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
            bail!("coalition sizes must be positive integers, got {v}");
        }
    }
    if to < from {
        bail!("--to ({to}) must not be below --from ({from})");
    }
    let (lo, hi) = (from as u64, to as u64);
    let Some(steps) = steps else {
        return Ok((lo..=hi).collect());
    };
    let mut sizes: Vec<u64> = linspace(from, to, steps)?.into_iter().map(|v| v.round() as u64).collect();
    sizes.dedup();
    Ok(sizes)
}

#[derive(Serialize)]
struct FiniteLimit {
    rho: f64,
    #[serde(rename = "Y_inf")]
    y_inf: f64,
}

fn limits<W: Write>(out: &mut W, format: Format, params: &MarketParams) -> anyhow::Result<()> {
    let limit = limit_analysis(params)?;
    if format != Format::Table {
        return emit_record(out, format, &limit);
    }
    let side = if limit.game_type == GameType::OverMean { "g~" } else { "g" };
    let relation = match limit.regime {
        CutRegime::AtOrAboveCut => "≥",
        CutRegime::BelowCut => "<",
    };
    writeln!(
        out,
        "{}, t/2 {relation} {side}, Φ(Y∞) = {:.6}",
        limit.game_type,
        limit.phi_y_inf.get()
    )?;
    write_key_values(out, &output::fields(&limit)?)?;
    Ok(())
}

#[derive(Serialize)]
struct McRow {
    quantity: &'static str,
    mc_mean: f64,
    std_error: f64,
    closed_form: f64,
    z_score: f64,
    within_band: bool,
}

#[derive(Serialize)]
struct McReport {
    n: u64,
    x: f64,
    count: usize,
    seed: u64,
    rng: &'static str,
    band_std_errors: f64,
    rows: Vec<McRow>,
}

fn mc_row(quantity: &'static str, mean: f64, std_error: f64, closed_form: f64) -> McRow {
    let diff = mean - closed_form;
    let z_score = if std_error > 0.0 { diff / std_error } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
    McRow { quantity, mc_mean: mean, std_error, closed_form, z_score, within_band: z_score.abs() <= MC_BAND }
}

#[allow(clippy::too_many_arguments)]
fn simulate<W: Write>(
    out: &mut W,
    format: Format,
    params: &MarketParams,
    n: u64,
    count: usize,
    seed: u64,
    x: Option<f64>,
    dump: Option<&Path>,
) -> anyhow::Result<()> {
    let x = match x {
        Some(x) => x,
        None => solve_optimal_quantity(n, params)?.x,
    };
    let agents = usize::try_from(n).context("coalition size too large to simulate")?;
    let samples = sample_demands(agents, params.mu, params.sigma, params.rho, count, seed)?;
    if let Some(path) = dump {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        samples.write_csv(&mut writer)?;
        writer.flush()?;
    }

    let profit = estimate_profit(x, &samples, params)?;
    let ship = estimate_transshipment(x, &samples)?;
    let y = StandardizedQuantity::new((x - params.mu) / params.sigma)?;
    let report = McReport {
        n,
        x,
        count,
        seed,
        rng: RNG_ALGORITHM,
        band_std_errors: MC_BAND,
        rows: vec![
            mc_row("profit", profit.mean, profit.std_error, expected_profit(x, n, params)?),
            mc_row("transshipment", ship.mean, ship.std_error, expected_transshipment(y, n, params)?),
        ],
    };
    match format {
        Format::Json => write_json(out, &report),
        Format::Csv => emit_records(out, format, &report.rows),
        Format::Table => {
            let info = [
                ("n", n.to_string()),
                ("x", num(x)),
                ("count", count.to_string()),
                ("seed", seed.to_string()),
                ("rng", RNG_ALGORITHM.to_string()),
            ];
            let info: Vec<(String, String)> = info.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            write_key_values(out, &info)?;
            writeln!(out)?;
            emit_records(out, format, &report.rows)
        }
    }
}

#[derive(Serialize)]
struct CoreRow {
    m: u64,
    beta_m: f64,
    margin: f64,
}

fn core_check<W: Write>(out: &mut W, format: Format, params: &MarketParams, n: u64, tol: f64) -> anyhow::Result<()> {
    if !(tol >= 0.0 && tol.is_finite()) {
        bail!("--tol must be a non-negative number, got {tol}");
    }
    let report = check_equal_allocation_core(params, n, tol)?;
    let grand = report.beta[report.beta.len() - 1];
    let rows: Vec<CoreRow> = report
        .beta
        .iter()
        .zip(1..)
        .map(|(&b, m)| CoreRow { m, beta_m: b, margin: grand - b })
        .collect();
    match format {
        Format::Json => write_json(out, &report),
        Format::Csv => emit_records(out, format, &rows),
        Format::Table => {
            let summary = [
                ("n", n.to_string()),
                ("in_core", report.in_core.to_string()),
                ("worst_margin", num(report.worst_margin)),
                ("witness_m", report.witness_m.to_string()),
            ];
            let summary: Vec<(String, String)> = summary.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            write_key_values(out, &summary)?;
            writeln!(out)?;
            emit_records(out, format, &rows)
        }
    }
}

#[derive(Deserialize)]
struct AgentRow {
    agent: String,
    #[serde(rename = "H")]
    surplus: f64,
    #[serde(rename = "E")]
    shortage: f64,
}

#[derive(Serialize)]
struct Shipment {
    from: String,
    to: String,
    quantity: f64,
}

#[derive(Serialize)]
struct RecourseReport {
    shipments: Vec<Shipment>,
    objective: f64,
}

fn read_agents(path: &Path) -> anyhow::Result<Vec<AgentRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<AgentRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} lists no agents", path.display());
    }
    Ok(rows)
}

fn read_matrix(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("parsing {}", path.display()))?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{} row {}: expected numbers", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

fn recourse<W: Write>(out: &mut W, format: Format, agents_path: &Path, profit_path: &Path) -> anyhow::Result<()> {
    let agents = read_agents(agents_path)?;
    let matrix = read_matrix(profit_path)?;
    if matrix.len() != agents.len() {
        bail!("profit matrix has {} rows but {} agents are listed", matrix.len(), agents.len());
    }
    let profit = ProfitMatrix::from_rows(matrix)?;
    let ss = SurplusShortage::new(
        agents.iter().map(|a| a.surplus).collect(),
        agents.iter().map(|a| a.shortage).collect(),
    )?;
    let plan = solve_transshipment_plan(&ss, &profit)?;
    let shipments: Vec<Shipment> = plan
        .shipments()
        .map(|(i, j, q)| Shipment { from: agents[i].agent.clone(), to: agents[j].agent.clone(), quantity: q })
        .collect();

    let header: Vec<String> = ["from", "to", "quantity"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> =
        shipments.iter().map(|s| vec![s.from.clone(), s.to.clone(), num(s.quantity)]).collect();
    match format {
        Format::Json => write_json(out, &RecourseReport { shipments, objective: plan.objective }),
        Format::Csv => {
            write_csv(out, &header, &rows)?;
            writeln!(out, "objective,{}", num(plan.objective))?;
            Ok(())
        }
        Format::Table => {
            write_table(out, &header, &rows)?;
            writeln!(out, "objective  {}", num(plan.objective))?;
            Ok(())
        }
    }
}
