//! Four-case time-series study: economic baseline, PV power-factor stress,
//! optimal load delivery, and capacitor-enhanced rerun.

use std::collections::BTreeMap;

use log::{info, warn};

use crate::acopf::{solve, Objective, ObjectiveOptions, OpfProblem, OpfSolution, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{BusId, DemandSeries, Network, PfSign, PvUnit, ShuntCapacitor};
use crate::sensitivity::{
    aggregate_hours, composite_score, cross_case_rank_table, extract, Aggregation, HorizonRanking,
    RankTable, RecordStatus, ScoreWeights, SensitivityRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseId {
    Economic,
    VoltageStress,
    Old,
    CapEnhanced,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::Economic,
        CaseId::VoltageStress,
        CaseId::Old,
        CaseId::CapEnhanced,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CaseId::Economic => "economic",
            CaseId::VoltageStress => "voltage_stress",
            CaseId::Old => "old",
            CaseId::CapEnhanced => "cap_enhanced",
        }
    }

    /// 1-based case number used in output file names.
    pub fn number(&self) -> usize {
        match self {
            CaseId::Economic => 1,
            CaseId::VoltageStress => 2,
            CaseId::Old => 3,
            CaseId::CapEnhanced => 4,
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidScenario(format!("unknown case {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfOverride {
    pub pf: f64,
    pub sign: PfSign,
}

impl PfOverride {
    pub fn new(pf: f64, sign: PfSign) -> Result<Self> {
        check_pf(pf)?;
        Ok(PfOverride { pf, sign })
    }
}

fn check_pf(pf: f64) -> Result<()> {
    if pf > 0.0 && pf <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOption(format!(
            "power factor must lie in (0, 1], got {pf}"
        )))
    }
}

/// `(P_inj MW, Q_inj Mvar)` of a PV unit at `hour`. Leading injects reactive
/// power, lagging absorbs it.
pub fn pv_injection(pv: &PvUnit, hour: usize, pf_override: Option<PfOverride>) -> Result<(f64, f64)> {
    let (pf, sign) = match pf_override {
        Some(o) => (o.pf, o.sign),
        None => (pv.pf_nominal, pv.pf_sign),
    };
    check_pf(pf)?;
    let p = *pv.p_profile.get(hour).ok_or_else(|| {
        Error::InvalidScenario(format!(
            "PV unit at bus {} has no output for hour {hour}",
            pv.bus
        ))
    })?;
    if p == 0.0 {
        return Ok((0.0, 0.0));
    }
    let q = p * pf.acos().tan();
    Ok(match sign {
        PfSign::Leading => (p, q),
        PfSign::Lagging => (p, -q),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub case: CaseId,
    /// Empty, or one entry per PV unit.
    pub pf_overrides: Vec<Option<PfOverride>>,
    pub capacitors: Vec<ShuntCapacitor>,
    pub options: ObjectiveOptions,
    pub solver: SolverOptions,
    pub weights: ScoreWeights,
    pub aggregation: Aggregation,
    /// Start each hour from the previous Optimal hour.
    pub warm_start: bool,
}

impl Scenario {
    pub fn new(case: CaseId) -> Self {
        Scenario {
            case,
            pf_overrides: Vec::new(),
            capacitors: Vec::new(),
            options: ObjectiveOptions::default(),
            solver: SolverOptions::default(),
            weights: ScoreWeights::default(),
            aggregation: Aggregation::Mean,
            warm_start: true,
        }
    }

    /// Same override for all `n_pv` units.
    pub fn with_uniform_pf(mut self, pf: PfOverride, n_pv: usize) -> Self {
        self.pf_overrides = vec![Some(pf); n_pv];
        self
    }

    pub fn with_capacitors(mut self, caps: Vec<ShuntCapacitor>) -> Self {
        self.capacitors = caps;
        self
    }

    pub fn objective(&self) -> Objective {
        match self.case {
            CaseId::Old => Objective::OptimalLoadDelivery,
            _ => Objective::Economic,
        }
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        if !self.pf_overrides.is_empty() && self.pf_overrides.len() != net.pv_units().len() {
            return Err(Error::InvalidScenario(format!(
                "{} power-factor overrides for {} PV units",
                self.pf_overrides.len(),
                net.pv_units().len()
            )));
        }
        for o in self.pf_overrides.iter().flatten() {
            check_pf(o.pf)?;
        }
        match self.case {
            CaseId::CapEnhanced if self.capacitors.is_empty() => {
                return Err(Error::InvalidScenario(
                    "the capacitor-enhanced case needs at least one capacitor".into(),
                ))
            }
            CaseId::VoltageStress if self.pf_overrides.iter().all(Option::is_none) => {
                return Err(Error::InvalidScenario(
                    "the voltage-stress case needs at least one power-factor override".into(),
                ))
            }
            _ => {}
        }
        self.options.validate()?;
        self.solver.validate()?;
        ScoreWeights::new(self.weights.w_q, self.weights.w_v)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HourStatus {
    Solved(SolveStatus),
    /// Invalid demand data; not solved.
    Excluded,
}

impl HourStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            HourStatus::Solved(s) => s.as_str(),
            HourStatus::Excluded => "excluded",
        }
    }

    pub fn is_optimal(&self) -> bool {
        *self == HourStatus::Solved(SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourResult {
    pub hour: usize,
    pub status: HourStatus,
    pub solution: Option<OpfSolution>,
    /// True load per network bus, MW.
    pub p_d: Vec<f64>,
    /// Shed real power per network bus, MW.
    pub p_shed: Vec<f64>,
    pub pv_p: f64,
    pub pv_q: f64,
    /// Mean over energized buses of the per-bus mismatch, p.u.
    pub mismatch: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Ranked sensitivity records for this hour.
    pub sensitivity: Vec<SensitivityRecord>,
}

impl HourResult {
    pub fn p_demand(&self) -> f64 {
        self.p_d.iter().sum()
    }

    pub fn p_shed_total(&self) -> f64 {
        self.p_shed.iter().sum()
    }

    pub fn p_served(&self) -> f64 {
        self.p_demand() - self.p_shed_total()
    }
}

/// One row of the cross-case comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSummary {
    pub case: String,
    /// Generation cost over Optimal hours, $.
    pub total_cost: f64,
    /// MW summed over Optimal hours.
    pub load_served: f64,
    pub load_shed: f64,
    pub avg_mismatch: f64,
    pub avg_vmin: f64,
    pub avg_vmax: f64,
    pub top_cap_buses: Vec<BusId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseAggregates {
    pub total_cost: f64,
    pub load_served: f64,
    pub load_shed: f64,
    /// Demand in valid hours that did not solve to optimality, MW summed.
    pub unsolved_demand: f64,
    /// Demand summed over valid hours.
    pub total_demand: f64,
    pub load_served_mwh: f64,
    pub avg_mismatch: f64,
    pub avg_vmin: f64,
    pub avg_vmax: f64,
    pub valid_hours: usize,
    pub non_optimal_hours: usize,
    pub excluded_hours: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub case: CaseId,
    pub objective: Objective,
    pub dt: f64,
    /// Network bus ids, in network order.
    pub bus_ids: Vec<BusId>,
    pub energized: Vec<bool>,
    pub hours: Vec<HourResult>,
    pub aggregates: CaseAggregates,
    pub ranking: HorizonRanking,
    pub capacitors: Vec<ShuntCapacitor>,
}

impl CaseResult {
    pub fn top_buses(&self, m: usize) -> Vec<BusId> {
        self.ranking.records.iter().take(m).map(|r| r.bus_id).collect()
    }

    pub fn summary(&self, top_m: usize) -> CaseSummary {
        let a = &self.aggregates;
        CaseSummary {
            case: self.case.name().to_string(),
            total_cost: a.total_cost,
            load_served: a.load_served,
            load_shed: a.load_shed,
            avg_mismatch: a.avg_mismatch,
            avg_vmin: a.avg_vmin,
            avg_vmax: a.avg_vmax,
            top_cap_buses: self.top_buses(top_m),
        }
    }

    pub fn shed_profile(&self) -> ShedProfile {
        ShedProfile {
            objective: self.objective,
            buses: self.bus_ids.clone(),
            hours: self
                .hours
                .iter()
                .map(|h| ShedHour {
                    optimal: h.status.is_optimal(),
                    dt: self.dt,
                    shed_mw: h.p_shed.clone(),
                })
                .collect(),
        }
    }
}

/// Per-bus shed power over a horizon, enough to price lost load.
#[derive(Debug, Clone, PartialEq)]
pub struct ShedProfile {
    pub objective: Objective,
    pub buses: Vec<BusId>,
    pub hours: Vec<ShedHour>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShedHour {
    pub optimal: bool,
    pub dt: f64,
    /// MW per bus in `ShedProfile::buses` order.
    pub shed_mw: Vec<f64>,
}

/// PV injections per network bus for one hour.
fn injections(
    net: &Network,
    hour: usize,
    overrides: &[Option<PfOverride>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = net.n_bus();
    let (mut p, mut q) = (vec![0.0; n], vec![0.0; n]);
    for (u, pv) in net.pv_units().iter().enumerate() {
        let o = overrides.get(u).copied().flatten();
        let (pi, qi) = pv_injection(pv, hour, o)?;
        let i = net.bus_index(pv.bus).expect("validated");
        p[i] += pi;
        q[i] += qi;
    }
    Ok((p, q))
}

fn solve_hour(
    problem: &OpfProblem<'_>,
    warm: Option<&OpfSolution>,
) -> Result<OpfSolution> {
    let first = solve(problem, warm)?;
    if first.is_optimal() || warm.is_none() {
        return Ok(first);
    }
    let cold = solve(problem, None)?;
    Ok(if cold.is_optimal() || cold.max_mismatch() < first.max_mismatch() {
        cold
    } else {
        first
    })
}

/// The single-hour OPF that `run_case` solves for `hour`. `net` must already
/// carry the scenario's capacitors.
pub fn hour_problem<'a>(
    scenario: &Scenario,
    net: &'a Network,
    demand: &DemandSeries,
    hour: usize,
) -> Result<OpfProblem<'a>> {
    let (p_inj, q_inj) = injections(net, hour, &scenario.pf_overrides)?;
    let (p_d, q_d) = demand.bus_vectors(net, hour);
    Ok(OpfProblem {
        network: net,
        p_d,
        q_d,
        p_inj,
        q_inj,
        objective: scenario.objective(),
        options: ObjectiveOptions {
            dt: demand.dt(),
            ..scenario.options.clone()
        },
        solver: scenario.solver.clone(),
    })
}

/// Solves every hour of the horizon in order.
pub fn run_case(scenario: &Scenario, network: &Network, demand: &DemandSeries) -> Result<CaseResult> {
    scenario.validate(network)?;
    demand.check_against(network)?;
    let net = if scenario.capacitors.is_empty() {
        network.clone()
    } else {
        network.with_shunts(&scenario.capacitors)?
    };
    let energized = net.energized().to_vec();
    let objective = scenario.objective();

    let candidates = capacitor_candidates(&net);
    let mut hours = Vec::with_capacity(demand.horizon());
    let mut last: Option<OpfSolution> = None;
    for t in 0..demand.horizon() {
        let pv_tot: (f64, f64) = injections(&net, t, &scenario.pf_overrides)
            .map(|(p, q)| (p.iter().sum(), q.iter().sum()))?;
        if !demand.is_valid(t) {
            hours.push(HourResult {
                hour: t,
                status: HourStatus::Excluded,
                solution: None,
                p_d: vec![0.0; net.n_bus()],
                p_shed: vec![0.0; net.n_bus()],
                pv_p: pv_tot.0,
                pv_q: pv_tot.1,
                mismatch: f64::NAN,
                v_min: f64::NAN,
                v_max: f64::NAN,
                sensitivity: excluded_records(&candidates),
            });
            continue;
        }
        let problem = hour_problem(scenario, &net, demand, t)?;
        let p_d = problem.p_d.clone();
        let warm = if scenario.warm_start { last.as_ref() } else { None };
        let sol = solve_hour(&problem, warm)?;
        if sol.status != SolveStatus::Optimal {
            warn!(
                "{} hour {t}: {} (max mismatch {:.3e})",
                scenario.case.name(),
                sol.status.as_str(),
                sol.max_mismatch()
            );
        }
        let live: Vec<usize> = (0..net.n_bus()).filter(|&i| energized[i]).collect();
        let mismatch = live.iter().map(|&i| sol.mismatch[i]).sum::<f64>() / live.len() as f64;
        let v_min = live.iter().map(|&i| sol.v[i]).fold(f64::INFINITY, f64::min);
        let v_max = live.iter().map(|&i| sol.v[i]).fold(f64::NEG_INFINITY, f64::max);
        let p_shed = p_d.iter().zip(&sol.shed).map(|(p, s)| p * s).collect();
        let records: Vec<SensitivityRecord> = extract(&sol, &net)?
            .into_iter()
            .filter(|r| candidates.contains(&r.bus_id))
            .collect();
        let sensitivity = composite_score(&records, scenario.weights)?;
        if sol.is_optimal() {
            last = Some(sol.clone());
        }
        hours.push(HourResult {
            hour: t,
            status: HourStatus::Solved(sol.status),
            solution: Some(sol),
            p_d,
            p_shed,
            pv_p: pv_tot.0,
            pv_q: pv_tot.1,
            mismatch,
            v_min,
            v_max,
            sensitivity,
        });
    }

    let per_hour: Vec<Vec<SensitivityRecord>> = hours.iter().map(|h| h.sensitivity.clone()).collect();
    let ranking = aggregate_hours(&per_hour, scenario.weights, scenario.aggregation)?;
    let aggregates = aggregate(&hours, demand.dt());
    info!(
        "{}: {} of {} valid hours optimal, served {:.3} MW, shed {:.3} MW",
        scenario.case.name(),
        aggregates.valid_hours - aggregates.non_optimal_hours,
        aggregates.valid_hours,
        aggregates.load_served,
        aggregates.load_shed
    );
    Ok(CaseResult {
        case: scenario.case,
        objective,
        dt: demand.dt(),
        bus_ids: net.bus_ids(),
        energized,
        hours,
        aggregates,
        ranking,
        capacitors: scenario.capacitors.clone(),
    })
}

/// Energized buses without a generator. A shunt at a generator bus only
/// displaces that unit's own reactive output.
pub fn capacitor_candidates(net: &Network) -> Vec<BusId> {
    net.buses()
        .iter()
        .enumerate()
        .filter(|(i, b)| net.energized()[*i] && !net.generators().iter().any(|g| g.bus == b.id))
        .map(|(_, b)| b.id)
        .collect()
}

fn excluded_records(candidates: &[BusId]) -> Vec<SensitivityRecord> {
    candidates
        .iter()
        .map(|&bus_id| SensitivityRecord {
            bus_id,
            os_q: 0.0,
            os_v: 0.0,
            s_score: 0.0,
            rank: 0,
            status: RecordStatus::Excluded,
        })
        .collect()
}

fn aggregate(hours: &[HourResult], dt: f64) -> CaseAggregates {
    let mut a = CaseAggregates {
        total_cost: 0.0,
        load_served: 0.0,
        load_shed: 0.0,
        unsolved_demand: 0.0,
        total_demand: 0.0,
        load_served_mwh: 0.0,
        avg_mismatch: 0.0,
        avg_vmin: 0.0,
        avg_vmax: 0.0,
        valid_hours: 0,
        non_optimal_hours: 0,
        excluded_hours: 0,
    };
    for h in hours {
        let Some(sol) = &h.solution else {
            a.excluded_hours += 1;
            continue;
        };
        a.valid_hours += 1;
        a.total_demand += h.p_demand();
        a.avg_mismatch += h.mismatch;
        a.avg_vmin += h.v_min;
        a.avg_vmax += h.v_max;
        if h.status.is_optimal() {
            a.total_cost += sol.generation_cost;
            a.load_served += h.p_served();
            a.load_shed += h.p_shed_total();
        } else {
            a.non_optimal_hours += 1;
            a.unsolved_demand += h.p_demand();
        }
    }
    if a.valid_hours > 0 {
        let n = a.valid_hours as f64;
        a.avg_mismatch /= n;
        a.avg_vmin /= n;
        a.avg_vmax /= n;
    } else {
        a.avg_mismatch = f64::NAN;
        a.avg_vmin = f64::NAN;
        a.avg_vmax = f64::NAN;
    }
    a.load_served_mwh = a.load_served * dt;
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Power factor applied to every PV unit in the stressed cases.
    pub stress: PfOverride,
    pub weights: ScoreWeights,
    pub aggregation: Aggregation,
    pub top_m: usize,
    /// Rated size of each Case 4 capacitor, Mvar at 1.0 p.u.
    pub cap_mvar: f64,
    /// Run Case 4 under the stressed power factors instead of nominal ones.
    pub case4_stressed: bool,
    pub options: ObjectiveOptions,
    pub solver: SolverOptions,
    pub warm_start: bool,
}

impl StudyConfig {
    pub fn new(stress: PfOverride) -> Self {
        StudyConfig {
            stress,
            weights: ScoreWeights::default(),
            aggregation: Aggregation::Mean,
            top_m: 3,
            cap_mvar: 0.5,
            case4_stressed: false,
            options: ObjectiveOptions::default(),
            solver: SolverOptions::default(),
            warm_start: true,
        }
    }

    fn scenario(&self, case: CaseId) -> Scenario {
        Scenario {
            options: self.options.clone(),
            solver: self.solver.clone(),
            weights: self.weights,
            aggregation: self.aggregation,
            warm_start: self.warm_start,
            ..Scenario::new(case)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    /// Cases 1 to 4 in order.
    pub cases: Vec<CaseResult>,
    pub top_m: usize,
    /// Buses that received capacitors in Case 4, in placement-rank order.
    pub cap_buses: Vec<BusId>,
    /// Combined ranking of Cases 1 to 3 that chose `cap_buses`.
    pub placement_ranking: Vec<SensitivityRecord>,
    pub rank_table: RankTable,
    /// Case 4 still has hours without an Optimal solution.
    pub capacitors_insufficient: bool,
    pub warnings: Vec<String>,
}

impl StudyResult {
    pub fn case(&self, id: CaseId) -> &CaseResult {
        &self.cases[id.number() - 1]
    }

    pub fn summaries(&self) -> Vec<CaseSummary> {
        self.cases.iter().map(|c| c.summary(self.top_m)).collect()
    }
}

/// Mean over cases of each case's horizon scores divided by that case's top
/// score, re-ranked. Normalizing keeps a load-delivery case, whose duals are
/// priced at the value of lost load, from drowning out the others.
fn combined_ranking(cases: &[&CaseResult], weights: ScoreWeights) -> Result<Vec<SensitivityRecord>> {
    let mut acc: BTreeMap<BusId, (f64, f64)> = BTreeMap::new();
    for c in cases {
        let top = c.ranking.records.first().map_or(0.0, |r| r.s_score);
        let norm = if top > 0.0 { 1.0 / top } else { 0.0 };
        for r in &c.ranking.records {
            let e = acc.entry(r.bus_id).or_insert((0.0, 0.0));
            e.0 += r.os_q.abs() * norm;
            e.1 += r.os_v.abs() * norm;
        }
    }
    let n = cases.len() as f64;
    let raw: Vec<SensitivityRecord> = acc
        .into_iter()
        .map(|(bus_id, (q, v))| SensitivityRecord {
            bus_id,
            os_q: q / n,
            os_v: v / n,
            s_score: 0.0,
            rank: 0,
            status: RecordStatus::Optimal,
        })
        .collect();
    composite_score(&raw, weights)
}

/// Runs Cases 1 to 3 concurrently, then Case 4 with capacitors at the
/// top-`m` buses of their combined ranking.
pub fn run_four_case_study(
    network: &Network,
    demand: &DemandSeries,
    config: &StudyConfig,
) -> Result<StudyResult> {
    if config.top_m == 0 {
        return Err(Error::InvalidOption("top-m must be at least 1".into()));
    }
    if !(config.cap_mvar > 0.0 && config.cap_mvar.is_finite()) {
        return Err(Error::InvalidOption("capacitor size must be positive".into()));
    }
    let n_pv = network.pv_units().len();
    let candidates = capacitor_candidates(network).len();
    let mut warnings = Vec::new();
    let top_m = if config.top_m > candidates {
        let msg = format!(
            "top-m {} exceeds the {candidates} candidate buses; using {candidates}",
            config.top_m
        );
        warn!("{msg}");
        warnings.push(msg);
        candidates
    } else {
        config.top_m
    };

    let s1 = config.scenario(CaseId::Economic);
    let s2 = config
        .scenario(CaseId::VoltageStress)
        .with_uniform_pf(config.stress, n_pv);
    let s3 = config.scenario(CaseId::Old).with_uniform_pf(config.stress, n_pv);
    for s in [&s1, &s2, &s3] {
        s.validate(network)?;
    }

    let (r1, r2, r3) = std::thread::scope(|scope| {
        let h1 = scope.spawn(|| run_case(&s1, network, demand));
        let h2 = scope.spawn(|| run_case(&s2, network, demand));
        let h3 = scope.spawn(|| run_case(&s3, network, demand));
        (
            h1.join().expect("case 1 worker panicked"),
            h2.join().expect("case 2 worker panicked"),
            h3.join().expect("case 3 worker panicked"),
        )
    });
    let (r1, r2, r3) = (r1?, r2?, r3?);

    let placement = combined_ranking(&[&r1, &r2, &r3], config.weights)?;
    let cap_buses: Vec<BusId> = placement.iter().take(top_m).map(|r| r.bus_id).collect();
    let caps: Vec<ShuntCapacitor> = cap_buses
        .iter()
        .map(|b| ShuntCapacitor::from_rating(*b, config.cap_mvar, network.s_base()))
        .collect();
    let mut s4 = config.scenario(CaseId::CapEnhanced).with_capacitors(caps);
    if config.case4_stressed {
        s4 = s4.with_uniform_pf(config.stress, n_pv);
    }
    let r4 = run_case(&s4, network, demand)?;

    let capacitors_insufficient = r4.aggregates.non_optimal_hours > 0;
    if capacitors_insufficient {
        let msg = format!(
            "capacitors insufficient: Case 4 has {} non-optimal hours",
            r4.aggregates.non_optimal_hours
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let cases = vec![r1, r2, r3, r4];
    let rank_table = cross_case_rank_table(
        &cases
            .iter()
            .map(|c| (c.case.name().to_string(), c.ranking.records.clone()))
            .collect::<Vec<_>>(),
    )?;
    Ok(StudyResult {
        cases,
        top_m,
        cap_buses,
        placement_ranking: placement,
        rank_table,
        capacitors_insufficient,
        warnings,
    })
}
