//! Per-bus sensitivities from OPF multipliers and the composite placement score.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::acopf::{solve, OpfProblem, OpfSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::grid::{BusId, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    pub w_q: f64,
    pub w_v: f64,
}

impl ScoreWeights {
    pub fn new(w_q: f64, w_v: f64) -> Result<Self> {
        if !(w_q >= 0.0 && w_v >= 0.0) {
            return Err(Error::InvalidOption(format!(
                "score weights must be nonnegative, got ({w_q}, {w_v})"
            )));
        }
        if ((w_q + w_v) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOption(format!(
                "score weights must sum to 1, got {}",
                w_q + w_v
            )));
        }
        Ok(ScoreWeights { w_q, w_v })
    }

    pub fn score(&self, os_q: f64, os_v: f64) -> f64 {
        self.w_q * os_q.abs() + self.w_v * os_v.abs()
    }
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights { w_q: 0.5, w_v: 0.5 }
    }
}

/// Parses `"wq,wv"`.
impl FromStr for ScoreWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidOption(format!("weights must look like `0.5,0.5`, got {s:?}"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let w_q: f64 = parts[0].parse().map_err(|_| bad())?;
        let w_v: f64 = parts[1].parse().map_err(|_| bad())?;
        ScoreWeights::new(w_q, w_v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Optimal,
    /// Multipliers come from a non-KKT point and carry no meaning.
    NonOptimal(SolveStatus),
    /// Demand data for the hour was invalid; no solve was attempted.
    Excluded,
}

impl RecordStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordStatus::Optimal => "optimal",
            RecordStatus::NonOptimal(s) => s.as_str(),
            RecordStatus::Excluded => "excluded",
        }
    }
}

impl FromStr for RecordStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => RecordStatus::Optimal,
            "max_iterations" => RecordStatus::NonOptimal(SolveStatus::MaxIterations),
            "infeasible" => RecordStatus::NonOptimal(SolveStatus::Infeasible),
            "excluded" => RecordStatus::Excluded,
            other => return Err(Error::InvalidOption(format!("unknown status {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRecord {
    pub bus_id: BusId,
    /// dL/dQ_D in $/Mvar.
    pub os_q: f64,
    /// dL/dV_max in $/p.u.
    pub os_v: f64,
    pub s_score: f64,
    /// 1-based; 0 until scored.
    pub rank: usize,
    pub status: RecordStatus,
}

/// Raw sensitivities at every energized bus, in network bus order.
pub fn extract(solution: &OpfSolution, network: &Network) -> Result<Vec<SensitivityRecord>> {
    let nb = network.n_bus();
    for (name, v) in [
        ("lambda_q", &solution.lambda_q),
        ("mu_vmax", &solution.mu_vmax),
        ("shed", &solution.shed),
    ] {
        if v.len() != nb {
            return Err(Error::MissingMultipliers(format!(
                "{name} has {} entries for {nb} buses",
                v.len()
            )));
        }
    }
    let status = match solution.status {
        SolveStatus::Optimal => RecordStatus::Optimal,
        s => RecordStatus::NonOptimal(s),
    };
    let sb = solution.s_base;
    Ok(network
        .buses()
        .iter()
        .enumerate()
        .filter(|(i, _)| network.energized()[*i])
        .map(|(i, bus)| SensitivityRecord {
            bus_id: bus.id,
            os_q: -solution.lambda_q[i] * (1.0 - solution.shed[i]) / sb,
            os_v: -solution.mu_vmax[i],
            s_score: 0.0,
            rank: 0,
            status,
        })
        .collect())
}

/// Scores and ranks records: descending score, ties by ascending bus id.
pub fn composite_score(
    records: &[SensitivityRecord],
    weights: ScoreWeights,
) -> Result<Vec<SensitivityRecord>> {
    let weights = ScoreWeights::new(weights.w_q, weights.w_v)?;
    let mut out: Vec<SensitivityRecord> = records
        .iter()
        .map(|r| SensitivityRecord {
            s_score: weights.score(r.os_q, r.os_v),
            ..r.clone()
        })
        .collect();
    out.sort_by(|a, b| {
        b.s_score
            .total_cmp(&a.s_score)
            .then(a.bus_id.cmp(&b.bus_id))
    });
    for (i, r) in out.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Mean of per-hour scores over Optimal hours.
    #[default]
    Mean,
    /// Largest per-hour score over Optimal hours.
    Max,
}

impl Aggregation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Max => "max",
        }
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::InvalidOption(format!(
                "aggregation must be mean or max, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonRanking {
    /// Ranked; `os_q` / `os_v` hold mean magnitudes (or the peak hour's values).
    pub records: Vec<SensitivityRecord>,
    pub optimal_hours: usize,
    /// Hours skipped because they were not Optimal or had no valid demand.
    pub skipped_hours: usize,
}

/// Collapses per-hour records into one ranking over the Optimal hours.
/// With no Optimal hour every score is zero.
pub fn aggregate_hours(
    hours: &[Vec<SensitivityRecord>],
    weights: ScoreWeights,
    mode: Aggregation,
) -> Result<HorizonRanking> {
    let weights = ScoreWeights::new(weights.w_q, weights.w_v)?;
    let mut acc: BTreeMap<BusId, (f64, f64, f64)> = BTreeMap::new();
    let mut optimal = 0;
    for h in hours {
        for r in h {
            acc.entry(r.bus_id).or_insert((0.0, 0.0, f64::NEG_INFINITY));
        }
    }
    for h in hours {
        if h.is_empty() || h.iter().any(|r| r.status != RecordStatus::Optimal) {
            continue;
        }
        optimal += 1;
        for r in h {
            let e = acc.get_mut(&r.bus_id).expect("seeded");
            match mode {
                Aggregation::Mean => {
                    e.0 += r.os_q.abs();
                    e.1 += r.os_v.abs();
                }
                Aggregation::Max => {
                    let s = weights.score(r.os_q, r.os_v);
                    if s > e.2 {
                        *e = (r.os_q.abs(), r.os_v.abs(), s);
                    }
                }
            }
        }
    }
    let n = optimal.max(1) as f64;
    let raw: Vec<SensitivityRecord> = acc
        .into_iter()
        .map(|(bus_id, (q, v, _))| {
            let (os_q, os_v) = match mode {
                Aggregation::Mean => (q / n, v / n),
                Aggregation::Max => (q, v),
            };
            SensitivityRecord {
                bus_id,
                os_q,
                os_v,
                s_score: 0.0,
                rank: 0,
                status: RecordStatus::Optimal,
            }
        })
        .collect();
    Ok(HorizonRanking {
        records: composite_score(&raw, weights)?,
        optimal_hours: optimal,
        skipped_hours: hours.len() - optimal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdQuantity {
    /// Reactive demand at the bus, perturbed in Mvar.
    Qd,
    /// Upper voltage bound at the bus, perturbed in p.u.
    Vmax,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FdOutcome {
    Value(f64),
    /// Both perturbed solves were Optimal but a bound changed activity.
    Unreliable { value: f64, reason: String },
    /// The base or a perturbed solve was not Optimal.
    Unavailable(String),
}

impl FdOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            FdOutcome::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Slack below which a bound counts as active, p.u.
const ACTIVE_TOL: f64 = 1e-5;

fn active_set(sol: &OpfSolution, net: &Network) -> Vec<bool> {
    let sb = sol.s_base;
    let mut out = Vec::new();
    for (i, b) in net.buses().iter().enumerate() {
        if net.energized()[i] {
            out.push(sol.v[i] - b.v_min < ACTIVE_TOL);
            out.push(b.v_max - sol.v[i] < ACTIVE_TOL);
            out.push(sol.shed[i] > 1.0 - ACTIVE_TOL);
            out.push(sol.shed[i] > ACTIVE_TOL);
        }
    }
    for (g, gen) in net.generators().iter().enumerate() {
        out.push((sol.p_g[g] - gen.p_min) / sb < ACTIVE_TOL);
        out.push((gen.p_max - sol.p_g[g]) / sb < ACTIVE_TOL);
        out.push((sol.q_g[g] - gen.q_min) / sb < ACTIVE_TOL);
        out.push((gen.q_max - sol.q_g[g]) / sb < ACTIVE_TOL);
    }
    out
}

/// Central difference of the optimal solver objective with respect to one
/// bus quantity. The result has the units of the matching [`extract`] field.
pub fn fd_oracle(
    problem: &OpfProblem<'_>,
    bus: BusId,
    quantity: FdQuantity,
    eps: f64,
) -> Result<FdOutcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidOption("eps must be positive".into()));
    }
    let net = problem.network;
    let k = net.bus_index(bus).ok_or_else(|| Error::DanglingBus {
        context: "finite-difference oracle".into(),
        bus,
    })?;
    let base = solve(problem, None)?;
    if !base.is_optimal() {
        return Ok(FdOutcome::Unavailable(format!(
            "base solve is {}",
            base.status.as_str()
        )));
    }
    let base_set = active_set(&base, net);

    let run = |delta: f64| -> Result<(OpfSolution, Vec<bool>)> {
        match quantity {
            FdQuantity::Qd => {
                let mut pb = problem.clone();
                pb.q_d[k] += delta;
                let s = solve(&pb, Some(&base))?;
                let a = active_set(&s, net);
                Ok((s, a))
            }
            FdQuantity::Vmax => {
                let shifted = net.with_voltage_limits(|b| {
                    if b.id == bus {
                        (b.v_min, b.v_max + delta)
                    } else {
                        (b.v_min, b.v_max)
                    }
                })?;
                let pb = OpfProblem {
                    network: &shifted,
                    ..problem.clone()
                };
                let s = solve(&pb, Some(&base))?;
                let a = active_set(&s, &shifted);
                Ok((s, a))
            }
        }
    };
    let (plus, a_plus) = run(eps)?;
    let (minus, a_minus) = run(-eps)?;
    for (tag, s) in [("+eps", &plus), ("-eps", &minus)] {
        if !s.is_optimal() {
            return Ok(FdOutcome::Unavailable(format!(
                "{tag} solve is {}",
                s.status.as_str()
            )));
        }
    }
    let value = (plus.solver_objective - minus.solver_objective) / (2.0 * eps);
    if a_plus != base_set || a_minus != base_set {
        return Ok(FdOutcome::Unreliable {
            value,
            reason: "active set changed under perturbation".into(),
        });
    }
    Ok(FdOutcome::Value(value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub cases: Vec<String>,
    /// Ascending bus ids.
    pub buses: Vec<BusId>,
    /// `ranks[b][c]`: rank of `buses[b]` in case `c`.
    pub ranks: Vec<Vec<usize>>,
    /// Buses holding the same rank in every case, ascending by that rank.
    pub high_confidence: Vec<BusId>,
    /// Longest top prefix on which every case agrees, in rank order.
    pub stable_top: Vec<BusId>,
    /// `agreement[a][b]`: share of buses with equal rank in cases `a` and `b`.
    pub agreement: Vec<Vec<f64>>,
}

pub fn cross_case_rank_table(cases: &[(String, Vec<SensitivityRecord>)]) -> Result<RankTable> {
    if cases.len() < 2 {
        return Err(Error::InvalidOption(
            "cross-case comparison needs at least two rankings".into(),
        ));
    }
    let rank_maps: Vec<BTreeMap<BusId, usize>> = cases
        .iter()
        .map(|(_, recs)| recs.iter().map(|r| (r.bus_id, r.rank)).collect())
        .collect();
    let buses: Vec<BusId> = rank_maps[0].keys().copied().collect();
    for ((name, recs), m) in cases.iter().zip(&rank_maps) {
        if m.len() != recs.len() || m.keys().copied().collect::<Vec<_>>() != buses {
            return Err(Error::InvalidOption(format!(
                "ranking for case {name} covers a different bus set"
            )));
        }
    }
    let ranks: Vec<Vec<usize>> = buses
        .iter()
        .map(|b| rank_maps.iter().map(|m| m[b]).collect())
        .collect();
    let mut high: Vec<(usize, BusId)> = buses
        .iter()
        .zip(&ranks)
        .filter(|(_, r)| r.iter().all(|x| *x == r[0]))
        .map(|(b, r)| (r[0], *b))
        .collect();
    high.sort_unstable();

    let mut by_rank: Vec<BTreeMap<usize, BusId>> = vec![BTreeMap::new(); cases.len()];
    for (b, r) in buses.iter().zip(&ranks) {
        for (c, x) in r.iter().enumerate() {
            by_rank[c].insert(*x, *b);
        }
    }
    let mut stable_top = Vec::new();
    for pos in 1..=buses.len() {
        match by_rank[0].get(&pos) {
            Some(b) if by_rank.iter().all(|m| m.get(&pos) == Some(b)) => stable_top.push(*b),
            _ => break,
        }
    }

    let nc = cases.len();
    let n = buses.len().max(1) as f64;
    let agreement = (0..nc)
        .map(|a| {
            (0..nc)
                .map(|b| ranks.iter().filter(|r| r[a] == r[b]).count() as f64 / n)
                .collect()
        })
        .collect();

    Ok(RankTable {
        cases: cases.iter().map(|(n, _)| n.clone()).collect(),
        buses,
        ranks,
        high_confidence: high.into_iter().map(|(_, b)| b).collect(),
        stable_top,
        agreement,
    })
}
