//! Network data model for a single-island AC microgrid.
//!
//! All impedances are per-unit on the system base `s_base`; all powers are
//! MW / Mvar. A [`Network`] is validated once on construction and is
//! immutable afterwards.

mod admittance;
mod demand;
mod parse;
mod per_unit;

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

pub use admittance::{build_admittance, AdmittanceMatrix};
pub use demand::{parse_demand, DemandSeries};
pub use parse::{parse_network, serialize_network};
pub use per_unit::{from_per_unit, to_per_unit, PerUnitSeries, PowerArrays};

pub type BusId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchStatus {
    Closed,
    Open,
}

/// Series RX line with total line charging `b_sh` split half per end.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    pub b_sh: f64,
    pub status: BranchStatus,
}

/// Quadratic generation cost `c2 p^2 + c1 p + c0` with `p` in MW, result in $/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl QuadraticCost {
    pub fn eval(&self, p_mw: f64) -> f64 {
        (self.c2 * p_mw + self.c1) * p_mw + self.c0
    }

    pub fn marginal(&self, p_mw: f64) -> f64 {
        2.0 * self.c2 * p_mw + self.c1
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        QuadraticCost {
            c2: self.c2 * alpha,
            c1: self.c1 * alpha,
            c0: self.c0 * alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost: QuadraticCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfSign {
    /// Capacitive: the inverter injects reactive power.
    Leading,
    /// Inductive: the inverter absorbs reactive power.
    Lagging,
}

impl PfSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            PfSign::Leading => "leading",
            PfSign::Lagging => "lagging",
        }
    }
}

impl std::str::FromStr for PfSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "leading" | "lead" => Ok(PfSign::Leading),
            "lagging" | "lag" => Ok(PfSign::Lagging),
            other => Err(Error::InvalidOption(format!(
                "power factor sign must be leading or lagging, got {other:?}"
            ))),
        }
    }
}

/// Grid-following PV inverter, modeled as a negative PQ load.
#[derive(Debug, Clone, PartialEq)]
pub struct PvUnit {
    pub bus: BusId,
    /// Real power injection per timestep, MW.
    pub p_profile: Vec<f64>,
    pub pf_nominal: f64,
    pub pf_sign: PfSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuntCapacitor {
    pub bus: BusId,
    /// Susceptance in p.u.; injects `b_cap * V^2 * s_base` Mvar.
    pub b_cap: f64,
}

impl ShuntCapacitor {
    /// Capacitor rated `mvar` at 1.0 p.u. voltage.
    pub fn from_rating(bus: BusId, mvar: f64, s_base: f64) -> Self {
        ShuntCapacitor {
            bus,
            b_cap: mvar / s_base,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    pv_units: Vec<PvUnit>,
    shunts: Vec<ShuntCapacitor>,
    s_base: f64,
    index: BTreeMap<BusId, usize>,
    energized: Vec<bool>,
    slack: usize,
}

impl Network {
    pub fn new(
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        pv_units: Vec<PvUnit>,
        shunts: Vec<ShuntCapacitor>,
        s_base: f64,
    ) -> Result<Self> {
        if !(s_base > 0.0 && s_base.is_finite()) {
            return Err(Error::InvalidNetwork(format!(
                "system base must be positive, got {s_base}"
            )));
        }
        let mut index = BTreeMap::new();
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate bus id {}", b.id)));
            }
            if !(b.v_min > 0.0 && b.v_min <= b.v_max && b.v_max.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "bus {}: voltage bounds must satisfy 0 < v_min <= v_max, got [{}, {}]",
                    b.id, b.v_min, b.v_max
                )));
            }
            if !(b.base_kv > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "bus {}: base kV must be positive",
                    b.id
                )));
            }
        }
        let resolve = |bus: BusId, context: &str| {
            index.get(&bus).copied().ok_or_else(|| Error::DanglingBus {
                context: context.to_string(),
                bus,
            })
        };

        for br in &branches {
            let ctx = format!("branch {}-{}", br.from, br.to);
            resolve(br.from, &ctx)?;
            resolve(br.to, &ctx)?;
            if br.from == br.to {
                return Err(Error::InvalidNetwork(format!("{ctx} is a self-loop")));
            }
            if br.x == 0.0 {
                return Err(Error::ZeroReactance {
                    from: br.from,
                    to: br.to,
                });
            }
            if !(br.r >= 0.0) || !br.x.is_finite() || !br.b_sh.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "{ctx}: resistance must be nonnegative and parameters finite"
                )));
            }
        }
        for g in &generators {
            resolve(g.bus, "generator")?;
            if !(g.p_min <= g.p_max) || !(g.q_min <= g.q_max) {
                return Err(Error::InvalidNetwork(format!(
                    "generator at bus {}: inverted limits",
                    g.bus
                )));
            }
            if !(g.cost.c2 >= 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "generator at bus {}: cost must be convex (c2 >= 0)",
                    g.bus
                )));
            }
        }
        for pv in &pv_units {
            resolve(pv.bus, "PV unit")?;
            if !(pv.pf_nominal > 0.0 && pv.pf_nominal <= 1.0) {
                return Err(Error::InvalidNetwork(format!(
                    "PV unit at bus {}: power factor must lie in (0, 1]",
                    pv.bus
                )));
            }
            if pv.p_profile.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "PV unit at bus {}: non-finite profile value",
                    pv.bus
                )));
            }
        }
        for sh in &shunts {
            resolve(sh.bus, "shunt")?;
            if !(sh.b_cap > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "shunt at bus {}: susceptance must be positive",
                    sh.bus
                )));
            }
        }

        let slacks: Vec<usize> = buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(i, _)| i)
            .collect();
        let slack = match slacks.as_slice() {
            [] => return Err(Error::NoSlack),
            [s] => *s,
            _ => {
                return Err(Error::MultiIsland(format!(
                    "{} slack buses declared",
                    slacks.len()
                )))
            }
        };
        if !generators.iter().any(|g| index[&g.bus] == slack) {
            return Err(Error::InvalidNetwork(format!(
                "slack bus {} hosts no generator",
                buses[slack].id
            )));
        }

        let mut net = Network {
            energized: vec![false; buses.len()],
            buses,
            branches,
            generators,
            pv_units,
            shunts,
            s_base,
            index,
            slack,
        };
        net.energized = net.reachable_from(slack);

        let dead = |bus: BusId| !net.energized[net.index[&bus]];
        let stranded = net
            .generators
            .iter()
            .map(|g| (g.bus, "generator"))
            .chain(net.pv_units.iter().map(|p| (p.bus, "PV unit")))
            .chain(net.shunts.iter().map(|s| (s.bus, "shunt")))
            .find(|(bus, _)| dead(*bus));
        if let Some((bus, what)) = stranded {
            return Err(Error::MultiIsland(format!(
                "{what} at bus {bus} is not connected to the slack bus"
            )));
        }
        Ok(net)
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn pv_units(&self) -> &[PvUnit] {
        &self.pv_units
    }

    pub fn shunts(&self) -> &[ShuntCapacitor] {
        &self.shunts
    }

    pub fn s_base(&self) -> f64 {
        self.s_base
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Buses reachable from the slack through closed branches.
    pub fn energized(&self) -> &[bool] {
        &self.energized
    }

    /// Connected components of the closed-branch graph over all buses.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.buses.len()];
        let mut count = 0;
        for start in 0..self.buses.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            for (i, r) in self.reachable_from(start).into_iter().enumerate() {
                seen[i] |= r;
            }
        }
        count
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| b.status == BranchStatus::Closed) {
            let (f, t) = (self.index[&br.from], self.index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Copy of this network with extra shunt capacitors installed.
    pub fn with_shunts(&self, extra: &[ShuntCapacitor]) -> Result<Network> {
        let mut shunts = self.shunts.clone();
        shunts.extend_from_slice(extra);
        Network::new(
            self.buses.clone(),
            self.branches.clone(),
            self.generators.clone(),
            self.pv_units.clone(),
            shunts,
            self.s_base,
        )
    }

    /// Copy with branch `idx` set to `status`.
    pub fn with_branch_status(&self, idx: usize, status: BranchStatus) -> Result<Network> {
        let mut branches = self.branches.clone();
        branches
            .get_mut(idx)
            .ok_or_else(|| Error::InvalidNetwork(format!("no branch {idx}")))?
            .status = status;
        Network::new(
            self.buses.clone(),
            branches,
            self.generators.clone(),
            self.pv_units.clone(),
            self.shunts.clone(),
            self.s_base,
        )
    }

    /// Copy with every bus voltage window replaced by `f(bus)`.
    pub fn with_voltage_limits(&self, f: impl Fn(&Bus) -> (f64, f64)) -> Result<Network> {
        let buses = self
            .buses
            .iter()
            .map(|b| {
                let (lo, hi) = f(b);
                Bus {
                    v_min: lo,
                    v_max: hi,
                    ..b.clone()
                }
            })
            .collect();
        Network::new(
            buses,
            self.branches.clone(),
            self.generators.clone(),
            self.pv_units.clone(),
            self.shunts.clone(),
            self.s_base,
        )
    }

    /// Copy with all generator cost coefficients multiplied by `alpha`.
    pub fn with_cost_scale(&self, alpha: f64) -> Result<Network> {
        let generators = self
            .generators
            .iter()
            .map(|g| Generator {
                cost: g.cost.scaled(alpha),
                ..g.clone()
            })
            .collect();
        Network::new(
            self.buses.clone(),
            self.branches.clone(),
            generators,
            self.pv_units.clone(),
            self.shunts.clone(),
            self.s_base,
        )
    }

    /// Copy with a replacement PV fleet.
    pub fn with_pv_units(&self, pv_units: Vec<PvUnit>) -> Result<Network> {
        Network::new(
            self.buses.clone(),
            self.branches.clone(),
            self.generators.clone(),
            pv_units,
            self.shunts.clone(),
            self.s_base,
        )
    }
}
