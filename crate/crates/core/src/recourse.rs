//! Second-stage transshipment: ship realized surpluses to realized shortages
//! so that total transshipment profit is maximal.
//!
//! The program is a transportation problem with optional shipping. It is
//! solved exactly by successive shortest augmenting paths on the residual
//! graph `source -> surplus agents -> shortage agents -> sink`, with route
//! cost `-p_ij`, augmenting only while a path still earns strictly positive
//! profit.

// Negated comparisons below deliberately treat NaN as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Realized surpluses `H_i = max(X_i - D_i, 0)` and shortages
/// `E_i = max(D_i - X_i, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurplusShortage {
    surplus: Vec<f64>,
    shortage: Vec<f64>,
}

impl SurplusShortage {
    pub fn new(surplus: Vec<f64>, shortage: Vec<f64>) -> Result<Self> {
        if surplus.len() != shortage.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} surpluses but {} shortages",
                surplus.len(),
                shortage.len()
            )));
        }
        for (i, (&h, &e)) in surplus.iter().zip(&shortage).enumerate() {
            if !(h.is_finite() && e.is_finite() && h >= 0.0 && e >= 0.0) {
                return Err(Error::DimensionMismatch(format!(
                    "agent {i}: surplus {h} and shortage {e} must be finite and non-negative"
                )));
            }
            if h > 0.0 && e > 0.0 {
                return Err(Error::DimensionMismatch(format!(
                    "agent {i} has both surplus {h} and shortage {e}"
                )));
            }
        }
        Ok(Self { surplus, shortage })
    }

    /// Builds `H` and `E` from order quantities and realized demands.
    pub fn from_realization(quantities: &[f64], demands: &[f64]) -> Result<Self> {
        if quantities.len() != demands.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} quantities but {} demands",
                quantities.len(),
                demands.len()
            )));
        }
        let surplus = quantities.iter().zip(demands).map(|(x, d)| (x - d).max(0.0)).collect();
        let shortage = quantities.iter().zip(demands).map(|(x, d)| (d - x).max(0.0)).collect();
        Self::new(surplus, shortage)
    }

    pub fn len(&self) -> usize {
        self.surplus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surplus.is_empty()
    }

    pub fn surplus(&self) -> &[f64] {
        &self.surplus
    }

    pub fn shortage(&self) -> &[f64] {
        &self.shortage
    }

    pub fn total_surplus(&self) -> f64 {
        self.surplus.iter().sum()
    }

    pub fn total_shortage(&self) -> f64 {
        self.shortage.iter().sum()
    }
}

/// Square matrix of per-unit transshipment profits `p_ij = r_j - nu_i - t_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ProfitMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "profit row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::DimensionMismatch(format!("profit row {i} holds non-finite {v}")));
            }
            values.extend(row);
        }
        Ok(Self { n, values })
    }

    pub fn uniform(n: usize, p: f64) -> Self {
        Self { n, values: vec![p; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[from * self.n + to]
    }
}

/// Shipment matrix `W` with its profit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransshipmentPlan {
    n: usize,
    flows: Vec<f64>,
    pub objective: f64,
}

impl TransshipmentPlan {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn flow(&self, from: usize, to: usize) -> f64 {
        self.flows[from * self.n + to]
    }

    /// Non-zero shipments as `(from, to, quantity)` in row-major order.
    pub fn shipments(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, &q)| q > 0.0)
            .map(|(k, &q)| (k / self.n, k % self.n, q))
    }

    pub fn shipped_from(&self, from: usize) -> f64 {
        (0..self.n).map(|j| self.flow(from, j)).sum()
    }

    pub fn shipped_to(&self, to: usize) -> f64 {
        (0..self.n).map(|i| self.flow(i, to)).sum()
    }
}

struct Arc {
    to: usize,
    residual: f64,
    cost: f64,
}

/// Residual network; arc `k ^ 1` is the reverse of arc `k`.
struct Network {
    arcs: Vec<Arc>,
    tails: Vec<usize>,
    nodes: usize,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self { arcs: Vec::new(), tails: Vec::new(), nodes }
    }

    fn add(&mut self, from: usize, to: usize, capacity: f64, cost: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, residual: capacity, cost });
        self.arcs.push(Arc { to: from, residual: 0.0, cost: -cost });
        self.tails.extend([from, to]);
        id
    }

    /// Bellman-Ford from `source`. Arcs are scanned in insertion order and
    /// labels change only when they improve by more than `slack`, so ties
    /// resolve to the lowest-index route and round-off cycles such as
    /// `(d - p) + p < d` are never followed.
    fn shortest_path(&self, source: usize, slack: f64) -> (Vec<f64>, Vec<Option<usize>>) {
        let mut dist = vec![f64::INFINITY; self.nodes];
        let mut via = vec![None; self.nodes];
        dist[source] = 0.0;
        for _ in 0..self.nodes {
            let mut changed = false;
            for (k, arc) in self.arcs.iter().enumerate() {
                if arc.residual <= 0.0 {
                    continue;
                }
                let from = self.tails[k];
                if dist[from] == f64::INFINITY {
                    continue;
                }
                let candidate = dist[from] + arc.cost;
                if candidate < dist[arc.to] - slack {
                    dist[arc.to] = candidate;
                    via[arc.to] = Some(k);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (dist, via)
    }
}

/// Exactly optimal transshipment plan for realized surpluses and shortages.
pub fn solve_transshipment_plan(ss: &SurplusShortage, profit: &ProfitMatrix) -> Result<TransshipmentPlan> {
    let n = ss.len();
    if profit.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} agents but a {}x{} profit matrix",
            profit.size(),
            profit.size()
        )));
    }
    let source = 0;
    let sink = 2 * n + 1;
    let mut net = Network::new(2 * n + 2);

    let mut routes = Vec::new();
    for i in 0..n {
        let h = ss.surplus[i];
        if h <= 0.0 {
            continue;
        }
        for j in 0..n {
            let e = ss.shortage[j];
            let p = profit.get(i, j);
            if e > 0.0 && p > 0.0 {
                let arc = net.add(1 + i, 1 + n + j, h.min(e), -p);
                routes.push((i, j, arc));
            }
        }
    }
    for (i, &h) in ss.surplus.iter().enumerate() {
        if h > 0.0 {
            net.add(source, 1 + i, h, 0.0);
        }
    }
    for (j, &e) in ss.shortage.iter().enumerate() {
        if e > 0.0 {
            net.add(1 + n + j, sink, e, 0.0);
        }
    }

    let max_profit = routes.iter().map(|&(i, j, _)| profit.get(i, j)).fold(0.0, f64::max);
    let slack = 1e-12 * max_profit.max(1.0);
    loop {
        let (dist, via) = net.shortest_path(source, slack);
        if !(dist[sink] < -slack) {
            break;
        }
        let mut path = Vec::new();
        let mut node = sink;
        while let Some(k) = via[node] {
            path.push(k);
            node = net.tails[k];
            if path.len() > net.nodes {
                break;
            }
        }
        if node != source {
            // A predecessor cycle can only come from round-off; stop here.
            break;
        }
        let bottleneck = path.iter().map(|&k| net.arcs[k].residual).fold(f64::INFINITY, f64::min);
        for &k in &path {
            net.arcs[k].residual -= bottleneck;
            net.arcs[k ^ 1].residual += bottleneck;
        }
    }

    let mut flows = vec![0.0; n * n];
    let mut objective = 0.0;
    for &(i, j, arc) in &routes {
        let q = net.arcs[arc ^ 1].residual;
        flows[i * n + j] = q;
        objective += profit.get(i, j) * q;
    }
    Ok(TransshipmentPlan { n, flows, objective })
}

/// Identical agents: every unit moved earns `p`, so the coalition ships
/// `min(sum H, sum E)`.
pub fn symmetric_recourse_value(ss: &SurplusShortage, p: f64) -> f64 {
    p * ss.total_surplus().min(ss.total_shortage())
}

/// Heterogeneous agent economics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralAgentParams {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub nu: Vec<f64>,
    /// Row-major `t[i][j]`, cost of moving a unit from `i` to `j`.
    pub t: Vec<Vec<f64>>,
}

impl GeneralAgentParams {
    /// `n` copies of one agent with a common transport cost.
    pub fn identical(n: usize, r: f64, c: f64, nu: f64, t: f64) -> Self {
        let t = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { t }).collect())
            .collect();
        Self { r: vec![r; n], c: vec![c; n], nu: vec![nu; n], t }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `p_ij = r_j - nu_i - t_ij`.
    pub fn profit_matrix(&self) -> Result<ProfitMatrix> {
        let n = self.len();
        if self.c.len() != n || self.nu.len() != n || self.t.len() != n {
            return Err(Error::DimensionMismatch("agent vectors differ in length".into()));
        }
        let rows = (0..n)
            .map(|i| (0..n).map(|j| self.r[j] - self.nu[i] - self.t[i][j]).collect())
            .collect();
        ProfitMatrix::from_rows(rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Dimensions(String),
    NonFinite { what: &'static str, index: usize },
    SalvageNotBelowCost { agent: usize },
    CostNotBelowPrice { agent: usize },
    NonZeroSelfTransport { agent: usize },
    /// `c_i < c_j + t_ji` fails.
    CostArbitrage { i: usize, j: usize },
    /// `nu_i < nu_j + t_ji` fails.
    SalvageArbitrage { i: usize, j: usize },
    /// `r_i < r_j + t_ji` fails.
    PriceArbitrage { i: usize, j: usize },
    /// `t_ij < r_j - nu_i` fails.
    TransportTooHigh { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions(msg) => write!(f, "dimensions: {msg}"),
            Violation::NonFinite { what, index } => write!(f, "{what} at {index} is not finite"),
            Violation::SalvageNotBelowCost { agent } => write!(f, "\"nu < c\" at agent {agent}"),
            Violation::CostNotBelowPrice { agent } => write!(f, "\"c < r\" at agent {agent}"),
            Violation::NonZeroSelfTransport { agent } => write!(f, "\"t_ii = 0\" at agent {agent}"),
            Violation::CostArbitrage { i, j } => write!(f, "\"c_i < c_j + t_ji\" at ({i},{j})"),
            Violation::SalvageArbitrage { i, j } => write!(f, "\"nu_i < nu_j + t_ji\" at ({i},{j})"),
            Violation::PriceArbitrage { i, j } => write!(f, "\"r_i < r_j + t_ji\" at ({i},{j})"),
            Violation::TransportTooHigh { i, j } => write!(f, "\"t_ij < r_j - nu_i\" at ({i},{j})"),
        }
    }
}

/// Lists every violated non-triviality assumption. Empty means valid.
pub fn validate_general_params(params: &GeneralAgentParams) -> Vec<Violation> {
    let n = params.len();
    let mut out = Vec::new();
    if params.c.len() != n || params.nu.len() != n || params.t.len() != n {
        out.push(Violation::Dimensions("r, c, nu and t must describe the same agents".into()));
        return out;
    }
    if let Some(i) = params.t.iter().position(|row| row.len() != n) {
        out.push(Violation::Dimensions(format!("transport row {i} has the wrong length")));
        return out;
    }
    for (what, values) in [("r", &params.r), ("c", &params.c), ("nu", &params.nu)] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            out.push(Violation::NonFinite { what, index });
        }
    }
    if let Some(index) = params.t.iter().flatten().position(|v| !v.is_finite()) {
        out.push(Violation::NonFinite { what: "t", index });
    }
    if !out.is_empty() {
        return out;
    }

    let (r, c, nu, t) = (&params.r, &params.c, &params.nu, &params.t);
    for i in 0..n {
        if !(nu[i] < c[i]) {
            out.push(Violation::SalvageNotBelowCost { agent: i });
        }
        if !(c[i] < r[i]) {
            out.push(Violation::CostNotBelowPrice { agent: i });
        }
        if t[i][i] != 0.0 {
            out.push(Violation::NonZeroSelfTransport { agent: i });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !(c[i] < c[j] + t[j][i]) {
                out.push(Violation::CostArbitrage { i, j });
            }
            if !(nu[i] < nu[j] + t[j][i]) {
                out.push(Violation::SalvageArbitrage { i, j });
            }
            if !(r[i] < r[j] + t[j][i]) {
                out.push(Violation::PriceArbitrage { i, j });
            }
            if !(t[i][j] < r[j] - nu[i]) {
                out.push(Violation::TransportTooHigh { i, j });
            }
        }
    }
    out
}
