//! Nonlinear AC optimal power flow.
//!
//! Multiplier convention: the Lagrangian is `L = f + lambda' g + mu' h` with
//! `g = generation - demand - flow = 0` per bus and every bound written as
//! `h <= 0`. Multipliers are reported in $ per p.u. of the constrained
//! quantity (for one solve, i.e. per hour of operation at `dt = 1`).

pub(crate) mod ipm;
pub(crate) mod model;

use log::debug;
use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{build_admittance, Network};
use ipm::{IpmSettings, IpmStatus, Nlp};
use model::OpfModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Generation cost with small tie-breaking weights on total generation and losses.
    Economic,
    /// Economic objective plus a value-of-lost-load penalty on continuous
    /// per-bus shed fractions.
    OptimalLoadDelivery,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Economic => "economic",
            Objective::OptimalLoadDelivery => "old",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "economic" => Ok(Objective::Economic),
            "old" => Ok(Objective::OptimalLoadDelivery),
            other => Err(Error::InvalidOption(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveOptions {
    /// Weight on total generation, as a fraction of the mean marginal cost.
    pub eps_pg: f64,
    /// Weight on network losses, as a fraction of the mean marginal cost.
    pub eps_loss: f64,
    /// $/MWh charged on shed energy.
    pub voll_rate: f64,
    /// Hours per step.
    pub dt: f64,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        ObjectiveOptions {
            eps_pg: 1e-3,
            eps_loss: 1e-4,
            voll_rate: 1000.0,
            dt: 1.0,
        }
    }
}

impl ObjectiveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_pg >= 0.0 && self.eps_loss >= 0.0) {
            return Err(Error::InvalidOption("tie-break weights must be nonnegative".into()));
        }
        if !(self.voll_rate > 0.0 && self.voll_rate.is_finite()) {
            return Err(Error::InvalidOption("voll_rate must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidOption("dt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Power-balance and bound violation tolerance, p.u.
    pub feas_tol: f64,
    /// Scaled stationarity tolerance.
    pub kkt_tol: f64,
    /// Per-constraint complementarity tolerance, $.
    pub comp_tol: f64,
    pub max_iter: usize,
    /// Barrier centering parameter.
    pub sigma: f64,
    /// Fraction-to-boundary factor.
    pub xi: f64,
    /// Restoration declares infeasibility after this many non-improving
    /// iterations above `infeasible_tol`.
    pub stall_iters: usize,
    pub infeasible_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-6,
            kkt_tol: 1e-6,
            comp_tol: 1e-6,
            max_iter: 200,
            sigma: 0.1,
            xi: 0.99995,
            stall_iters: 20,
            infeasible_tol: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("feas_tol", self.feas_tol),
            ("kkt_tol", self.kkt_tol),
            ("comp_tol", self.comp_tol),
            ("infeasible_tol", self.infeasible_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidOption(format!("{name} must be positive")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOption("max_iter must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidOption("sigma must lie in (0, 1)".into()));
        }
        if !(self.xi >= 0.5 && self.xi < 1.0) {
            return Err(Error::InvalidOption("xi must lie in [0.5, 1)".into()));
        }
        Ok(())
    }
}

/// One single-period AC-OPF instance.
#[derive(Debug, Clone)]
pub struct OpfProblem<'a> {
    pub network: &'a Network,
    /// True load per network bus, MW / Mvar. Shedding scales these.
    pub p_d: Vec<f64>,
    pub q_d: Vec<f64>,
    /// Fixed injections (PV as negative load) per network bus, MW / Mvar.
    pub p_inj: Vec<f64>,
    pub q_inj: Vec<f64>,
    pub objective: Objective,
    pub options: ObjectiveOptions,
    pub solver: SolverOptions,
}

impl<'a> OpfProblem<'a> {
    pub fn new(network: &'a Network, p_d: Vec<f64>, q_d: Vec<f64>, objective: Objective) -> Self {
        let n = network.n_bus();
        OpfProblem {
            network,
            p_d,
            q_d,
            p_inj: vec![0.0; n],
            q_inj: vec![0.0; n],
            objective,
            options: ObjectiveOptions::default(),
            solver: SolverOptions::default(),
        }
    }

    /// Demand net of fixed injections, MW / Mvar.
    pub fn effective_demand(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.p_d.iter().zip(&self.p_inj).map(|(d, i)| d - i).collect(),
            self.q_d.iter().zip(&self.q_inj).map(|(d, i)| d - i).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Primal operating point in physical units, per network bus / generator.
#[derive(Debug, Clone, PartialEq)]
pub struct OpfState {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    pub shed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpfSolution {
    pub status: SolveStatus,
    /// MW / Mvar per generator.
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    /// Per network bus; de-energized buses report zero.
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Shed fraction of the true load at each bus.
    pub shed: Vec<f64>,
    /// Power-balance multipliers, $/p.u.
    pub lambda_p: Vec<f64>,
    pub lambda_q: Vec<f64>,
    pub mu_vmax: Vec<f64>,
    pub mu_vmin: Vec<f64>,
    pub mu_pg_max: Vec<f64>,
    pub mu_pg_min: Vec<f64>,
    pub mu_qg_max: Vec<f64>,
    pub mu_qg_min: Vec<f64>,
    pub mu_shed_max: Vec<f64>,
    pub mu_shed_min: Vec<f64>,
    /// Per bus `max(|dP|, |dQ|)` power-balance residual, p.u.
    pub mismatch: Vec<f64>,
    /// Generation cost plus shed penalty, $ for this step.
    pub objective_value: f64,
    pub generation_cost: f64,
    pub shed_penalty: f64,
    /// Objective the solver minimized (includes tie-break terms).
    pub solver_objective: f64,
    pub losses_mw: f64,
    pub iterations: usize,
    pub s_base: f64,
}

impl OpfSolution {
    pub fn state(&self) -> OpfState {
        OpfState {
            v: self.v.clone(),
            theta: self.theta.clone(),
            p_g: self.p_g.clone(),
            q_g: self.q_g.clone(),
            shed: self.shed.clone(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn max_mismatch(&self) -> f64 {
        self.mismatch.iter().fold(0.0, |a, m| a.max(*m))
    }

    /// $/MWh.
    pub fn lambda_p_per_mw(&self) -> Vec<f64> {
        self.lambda_p.iter().map(|l| l / self.s_base).collect()
    }

    /// $/Mvarh.
    pub fn lambda_q_per_mvar(&self) -> Vec<f64> {
        self.lambda_q.iter().map(|l| l / self.s_base).collect()
    }
}

/// Generation cost in $/h plus, for load delivery, the shed penalty
/// `voll * s_k * P_Dk * dt`.
pub fn objective_cost(p_g: &[f64], shed: &[f64], problem: &OpfProblem<'_>) -> f64 {
    let gen: f64 = problem
        .network
        .generators()
        .iter()
        .zip(p_g)
        .map(|(g, p)| g.cost.eval(*p))
        .sum();
    gen + shed_penalty(shed, problem)
}

fn shed_penalty(shed: &[f64], problem: &OpfProblem<'_>) -> f64 {
    match problem.objective {
        Objective::Economic => 0.0,
        Objective::OptimalLoadDelivery => shed
            .iter()
            .zip(&problem.p_d)
            .map(|(s, p)| problem.options.voll_rate * s * p * problem.options.dt)
            .sum(),
    }
}

/// Per-bus `(dP, dQ)` power-balance residuals in p.u.:
/// generation minus effective demand minus the AC injection into the network.
pub fn residuals(state: &OpfState, problem: &OpfProblem<'_>) -> Result<Vec<(f64, f64)>> {
    let net = problem.network;
    let n = net.n_bus();
    let ng = net.generators().len();
    if state.v.len() != n
        || state.theta.len() != n
        || state.shed.len() != n
        || state.p_g.len() != ng
        || state.q_g.len() != ng
        || problem.p_d.len() != n
        || problem.q_d.len() != n
    {
        return Err(Error::Dimension("state does not match network".into()));
    }
    let sb = net.s_base();
    let y = build_admittance(net);
    let energized = net.energized();
    let mut out = vec![(0.0, 0.0); n];
    for (i, slot) in out.iter_mut().enumerate() {
        if !energized[i] {
            continue;
        }
        let keep = 1.0 - state.shed[i];
        let mut dp = -(problem.p_d[i] * keep - problem.p_inj[i]) / sb;
        let mut dq = -(problem.q_d[i] * keep - problem.q_inj[i]) / sb;
        for j in 0..n {
            let th = state.theta[i] - state.theta[j];
            let vv = state.v[i] * state.v[j];
            dp -= vv * (y.g(i, j) * th.cos() + y.b(i, j) * th.sin());
            dq -= vv * (y.g(i, j) * th.sin() - y.b(i, j) * th.cos());
        }
        *slot = (dp, dq);
    }
    for (g, gen) in net.generators().iter().enumerate() {
        let i = net.bus_index(gen.bus).expect("validated");
        out[i].0 += state.p_g[g] / sb;
        out[i].1 += state.q_g[g] / sb;
    }
    Ok(out)
}

fn solver_settings(problem: &OpfProblem<'_>, f_scale: f64) -> IpmSettings {
    let s = &problem.solver;
    IpmSettings {
        feas_tol: s.feas_tol,
        grad_tol: s.kkt_tol,
        comp_tol: s.comp_tol / f_scale,
        max_iter: s.max_iter,
        sigma: s.sigma,
        xi: s.xi,
        obj_scale: 1.0 / f_scale,
        stall_iters: s.stall_iters,
        infeasible_tol: s.infeasible_tol,
    }
}

/// Solves the AC-OPF by the primal-dual interior-point method. A warm start
/// seeds the primal point only. Solver failure is reported through
/// [`OpfSolution::status`]; `Err` is reserved for malformed input.
pub fn solve(problem: &OpfProblem<'_>, warm_start: Option<&OpfSolution>) -> Result<OpfSolution> {
    let model = OpfModel::new(problem)?;
    let x0 = match warm_start {
        Some(ws) => model.pack_solution(ws)?,
        None => model.flat_start(),
    };
    let set = solver_settings(problem, model.f_scale);
    let res = ipm::solve(&model, &x0, &set);
    let mut sol = assemble(&model, problem, &res.x, &res.lambda, &res.mu_lower, &res.mu_upper)?;
    sol.iterations = res.iterations;
    sol.status = match res.status {
        IpmStatus::Converged => {
            let rep = kkt_report(&sol, problem)?;
            if rep.passes(&problem.solver) {
                SolveStatus::Optimal
            } else {
                debug!("converged iterate failed the KKT check: {rep:?}");
                SolveStatus::MaxIterations
            }
        }
        IpmStatus::MaxIterations => SolveStatus::MaxIterations,
        IpmStatus::Infeasible => SolveStatus::Infeasible,
    };
    Ok(sol)
}

fn assemble(
    model: &OpfModel,
    problem: &OpfProblem<'_>,
    x: &[f64],
    lambda: &[f64],
    mu_lo: &[f64],
    mu_hi: &[f64],
) -> Result<OpfSolution> {
    let nb = model.nb;
    let ne = model.ne();
    let ng = model.ng();
    let sb = model.s_base;
    let (th, v) = model.unpack(x);
    let mut sol = OpfSolution {
        status: SolveStatus::MaxIterations,
        p_g: (0..ng).map(|g| x[model.pg_off + g] * sb).collect(),
        q_g: (0..ng).map(|g| x[model.qg_off + g] * sb).collect(),
        v: vec![0.0; nb],
        theta: vec![0.0; nb],
        shed: vec![0.0; nb],
        lambda_p: vec![0.0; nb],
        lambda_q: vec![0.0; nb],
        mu_vmax: vec![0.0; nb],
        mu_vmin: vec![0.0; nb],
        mu_pg_max: (0..ng).map(|g| mu_hi[model.pg_off + g]).collect(),
        mu_pg_min: (0..ng).map(|g| mu_lo[model.pg_off + g]).collect(),
        mu_qg_max: (0..ng).map(|g| mu_hi[model.qg_off + g]).collect(),
        mu_qg_min: (0..ng).map(|g| mu_lo[model.qg_off + g]).collect(),
        mu_shed_max: vec![0.0; nb],
        mu_shed_min: vec![0.0; nb],
        mismatch: vec![0.0; nb],
        objective_value: 0.0,
        generation_cost: 0.0,
        shed_penalty: 0.0,
        solver_objective: 0.0,
        losses_mw: 0.0,
        iterations: 0,
        s_base: sb,
    };
    for (k, &i) in model.buses.iter().enumerate() {
        sol.v[i] = v[k];
        sol.theta[i] = th[k];
        sol.lambda_p[i] = lambda[k];
        sol.lambda_q[i] = lambda[ne + k];
        sol.mu_vmax[i] = mu_hi[model.v_off + k];
        sol.mu_vmin[i] = mu_lo[model.v_off + k];
        if let Some(j) = model.s_idx[k] {
            // interior iterates never touch a bound; land on it so a run
            // that sheds nothing reports exactly zero
            let tol = problem.solver.feas_tol;
            sol.shed[i] = if x[j] <= tol {
                0.0
            } else if x[j] >= 1.0 - tol {
                1.0
            } else {
                x[j]
            };
            sol.mu_shed_max[i] = mu_hi[j];
            sol.mu_shed_min[i] = mu_lo[j];
        }
    }
    let flows = model.flows(x);
    sol.losses_mw = flows.p.iter().sum::<f64>() * sb;
    sol.solver_objective = model.full_objective(x, &flows);
    sol.generation_cost = objective_cost(&sol.p_g, &vec![0.0; nb], &OpfProblem {
        objective: Objective::Economic,
        ..problem.clone()
    });
    sol.shed_penalty = shed_penalty(&sol.shed, problem);
    sol.objective_value = sol.generation_cost + sol.shed_penalty;
    sol.mismatch = residuals(&sol.state(), problem)?
        .into_iter()
        .map(|(p, q)| p.abs().max(q.abs()))
        .collect();
    Ok(sol)
}

/// First-order optimality measures recomputed from a solution's primal
/// point and reported multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `|grad L|_inf / (1 + max |multiplier|)`.
    pub stationarity: f64,
    /// `|grad L|_inf` in $/p.u.
    pub stationarity_abs: f64,
    /// Worst power-balance residual or bound violation, p.u.
    pub feasibility: f64,
    /// Worst `mu * slack` over all bounds, $.
    pub complementarity: f64,
    /// Smallest bound multiplier.
    pub min_multiplier: f64,
    /// Human-readable description of each negative bound multiplier.
    pub negative_multipliers: Vec<String>,
}

impl KktReport {
    pub fn passes(&self, tol: &SolverOptions) -> bool {
        self.stationarity <= tol.kkt_tol
            && self.feasibility <= tol.feas_tol
            && self.complementarity <= tol.comp_tol
            && self.negative_multipliers.is_empty()
    }
}

/// Nonnegativity threshold for bound multipliers.
pub const MULTIPLIER_FLOOR: f64 = -1e-9;

pub fn kkt_report(sol: &OpfSolution, problem: &OpfProblem<'_>) -> Result<KktReport> {
    let model = OpfModel::new(problem)?;
    let x = model.pack_solution(sol)?;
    let ne = model.ne();
    let ng = model.ng();
    let net = problem.network;

    let mut lambda = DVector::zeros(2 * ne);
    let mut mu_hi = vec![0.0; model.n];
    let mut mu_lo = vec![0.0; model.n];
    for (k, &i) in model.buses.iter().enumerate() {
        lambda[k] = sol.lambda_p[i];
        lambda[ne + k] = sol.lambda_q[i];
        mu_hi[model.v_off + k] = sol.mu_vmax[i];
        mu_lo[model.v_off + k] = sol.mu_vmin[i];
        if let Some(j) = model.s_idx[k] {
            mu_hi[j] = sol.mu_shed_max[i];
            mu_lo[j] = sol.mu_shed_min[i];
        }
    }
    for g in 0..ng {
        mu_hi[model.pg_off + g] = sol.mu_pg_max[g];
        mu_lo[model.pg_off + g] = sol.mu_pg_min[g];
        mu_hi[model.qg_off + g] = sol.mu_qg_max[g];
        mu_lo[model.qg_off + g] = sol.mu_qg_min[g];
    }

    let mut grad = model.gradient(&x) + model.jacobian(&x).transpose() * &lambda;
    for j in 0..model.n {
        grad[j] += mu_hi[j] - mu_lo[j];
    }
    let stationarity_abs = grad.amax();
    let mult_max = lambda
        .amax()
        .max(mu_hi.iter().chain(&mu_lo).fold(0.0f64, |a, m| a.max(m.abs())));

    let mut feasibility = sol.max_mismatch();
    let mut complementarity = 0.0f64;
    let mut min_multiplier = f64::INFINITY;
    for j in 0..model.n {
        let (l, u) = (model.lower[j], model.upper[j]);
        if u.is_finite() {
            feasibility = feasibility.max(x[j] - u);
            complementarity = complementarity.max((mu_hi[j] * (u - x[j])).abs());
            min_multiplier = min_multiplier.min(mu_hi[j]);
        }
        if l.is_finite() {
            feasibility = feasibility.max(l - x[j]);
            complementarity = complementarity.max((mu_lo[j] * (x[j] - l)).abs());
            min_multiplier = min_multiplier.min(mu_lo[j]);
        }
    }

    let mut negative = Vec::new();
    let mut flag = |name: &str, owner: String, v: f64| {
        if v < MULTIPLIER_FLOOR {
            negative.push(format!("{name} at {owner} is {v:.6e}"));
        }
    };
    for &i in &model.buses {
        let id = net.buses()[i].id;
        flag("mu_vmax", format!("bus {id}"), sol.mu_vmax[i]);
        flag("mu_vmin", format!("bus {id}"), sol.mu_vmin[i]);
        flag("mu_shed_max", format!("bus {id}"), sol.mu_shed_max[i]);
        flag("mu_shed_min", format!("bus {id}"), sol.mu_shed_min[i]);
    }
    for (g, gen) in net.generators().iter().enumerate() {
        let owner = format!("generator {g} (bus {})", gen.bus);
        flag("mu_pg_max", owner.clone(), sol.mu_pg_max[g]);
        flag("mu_pg_min", owner.clone(), sol.mu_pg_min[g]);
        flag("mu_qg_max", owner.clone(), sol.mu_qg_max[g]);
        flag("mu_qg_min", owner, sol.mu_qg_min[g]);
    }

    Ok(KktReport {
        stationarity: stationarity_abs / (1.0 + mult_max),
        stationarity_abs,
        feasibility,
        complementarity,
        min_multiplier: if min_multiplier.is_finite() { min_multiplier } else { 0.0 },
        negative_multipliers: negative,
    })
}

#[cfg(test)]
mod tests;
