//! Capacitor investment against the value of lost load.

use std::collections::BTreeMap;

use crate::acopf::Objective;
use crate::error::{Error, Result};
use crate::grid::BusId;
use crate::study::{CaseSummary, ShedProfile};

/// Tolerance under which capacitor and lost-load costs count as equal.
pub const TIE_TOL: f64 = 1e-9;

/// Lost-load cost per bus, `sum_t shed_k(t) * voll * dt`, over Optimal hours.
pub fn voll_cost(profile: &ShedProfile, voll_rate: f64) -> Result<BTreeMap<BusId, f64>> {
    if profile.objective != Objective::OptimalLoadDelivery {
        return Err(Error::Contract(
            "lost-load cost needs a load-delivery case".into(),
        ));
    }
    if !(voll_rate > 0.0 && voll_rate.is_finite()) {
        return Err(Error::InvalidOption("voll_rate must be positive".into()));
    }
    let mut out: BTreeMap<BusId, f64> = profile.buses.iter().map(|b| (*b, 0.0)).collect();
    for h in profile.hours.iter().filter(|h| h.optimal) {
        if h.shed_mw.len() != profile.buses.len() {
            return Err(Error::Dimension("shed vector does not match bus list".into()));
        }
        for (b, s) in profile.buses.iter().zip(&h.shed_mw) {
            *out.get_mut(b).expect("seeded") += s * voll_rate * h.dt;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub bus_id: BusId,
    pub c_cap: f64,
    pub c_voll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningInput {
    pub candidates: Vec<Candidate>,
}

impl PlanningInput {
    /// Candidates priced from a load-delivery shed profile. Every candidate
    /// needs an entry in `c_cap`.
    pub fn from_shed(
        profile: &ShedProfile,
        voll_rate: f64,
        c_cap: &BTreeMap<BusId, f64>,
        candidates: &[BusId],
    ) -> Result<Self> {
        let voll = voll_cost(profile, voll_rate)?;
        let candidates = candidates
            .iter()
            .map(|b| {
                let c_voll = *voll.get(b).ok_or_else(|| Error::DanglingBus {
                    context: "planning candidates".into(),
                    bus: *b,
                })?;
                let c_cap = *c_cap.get(b).ok_or_else(|| {
                    Error::InvalidOption(format!("no capacitor cost given for bus {b}"))
                })?;
                Ok(Candidate {
                    bus_id: *b,
                    c_cap,
                    c_voll,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PlanningInput { candidates })
    }

    fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidOption("candidate set is empty".into()));
        }
        for c in &self.candidates {
            if !(c.c_cap >= 0.0 && c.c_cap.is_finite()) {
                return Err(Error::InvalidOption(format!(
                    "capacitor cost at bus {} must be nonnegative",
                    c.bus_id
                )));
            }
            if !(c.c_voll >= 0.0 && c.c_voll.is_finite()) {
                return Err(Error::InvalidOption(format!(
                    "lost-load cost at bus {} must be nonnegative",
                    c.bus_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    pub bus_id: BusId,
    pub c_cap: f64,
    pub c_voll: f64,
    pub install: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningDecision {
    pub rows: Vec<PlanRow>,
    /// Capacitor spend plus lost-load cost at buses left without one, $.
    pub objective: f64,
}

/// Installs where the capacitor is strictly cheaper than the lost load it
/// would prevent. The problem separates per bus, so this is optimal.
pub fn plan(input: &PlanningInput) -> Result<PlanningDecision> {
    input.validate()?;
    let rows: Vec<PlanRow> = input
        .candidates
        .iter()
        .map(|c| PlanRow {
            bus_id: c.bus_id,
            c_cap: c.c_cap,
            c_voll: c.c_voll,
            install: c.c_voll - c.c_cap > TIE_TOL,
        })
        .collect();
    let objective = rows
        .iter()
        .map(|r| if r.install { r.c_cap } else { r.c_voll })
        .sum();
    Ok(PlanningDecision { rows, objective })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomicComparison {
    /// Capacitor case minus load-delivery case, $.
    pub delta_cost: f64,
    /// MW of demand served in the capacitor case beyond the load-delivery case.
    pub recovered: f64,
    /// $ per recovered MW; `None` when nothing was recovered.
    pub price: Option<f64>,
    /// The capacitor case served less than the load-delivery case.
    pub anomalous: bool,
}

impl EconomicComparison {
    pub fn narrative(&self) -> String {
        match self.price {
            Some(p) if self.delta_cost >= 0.0 => format!(
                "Capacitor placement costs ${:.2} more than load shedding and recovers {:.2} MW, \
                 i.e. ${p:.2} per MW of recovered demand. If the site-specific VoLL exceeds \
                 ${p:.2}/MW, capacitor installation is cost-justified.",
                self.delta_cost, self.recovered
            ),
            Some(p) => format!(
                "Capacitor placement costs ${:.2} less than load shedding and recovers {:.2} MW, \
                 i.e. ${p:.2} per MW of recovered demand. Capacitor installation is \
                 cost-justified at any nonnegative VoLL.",
                -self.delta_cost, self.recovered
            ),
            None if self.anomalous => format!(
                "Capacitor case serves {:.2} MW less than the load-delivery case; \
                 the comparison is anomalous and no price per MW is reported.",
                -self.recovered
            ),
            None => format!(
                "No recovery needed: the load-delivery case sheds no demand \
                 (cost difference ${:.2}).",
                self.delta_cost
            ),
        }
    }
}

pub fn economic_comparison(case3: &CaseSummary, case4: &CaseSummary) -> EconomicComparison {
    let delta_cost = case4.total_cost - case3.total_cost;
    let recovered = case4.load_served - case3.load_served;
    let price = (recovered > 0.0).then(|| delta_cost / recovered);
    EconomicComparison {
        delta_cost,
        recovered,
        price,
        anomalous: recovered < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::ShedHour;

    fn cand(c_cap: &[f64], c_voll: &[f64]) -> PlanningInput {
        PlanningInput {
            candidates: c_cap
                .iter()
                .zip(c_voll)
                .enumerate()
                .map(|(i, (a, b))| Candidate {
                    bus_id: i as BusId + 1,
                    c_cap: *a,
                    c_voll: *b,
                })
                .collect(),
        }
    }

    fn summary(cost: f64, served: f64) -> CaseSummary {
        CaseSummary {
            case: String::new(),
            total_cost: cost,
            load_served: served,
            load_shed: 0.0,
            avg_mismatch: 0.0,
            avg_vmin: 1.0,
            avg_vmax: 1.0,
            top_cap_buses: vec![],
        }
    }

    #[test]
    fn threshold_arithmetic() {
        let d = plan(&cand(&[100.0, 100.0], &[50.0, 200.0])).unwrap();
        assert_eq!(d.rows.iter().map(|r| r.install).collect::<Vec<_>>(), vec![false, true]);
        assert_eq!(d.objective, 150.0);
        let d = plan(&cand(&[10.0, 10.0], &[1.0, 2.0])).unwrap();
        assert!(d.rows.iter().all(|r| !r.install));
        assert_eq!(d.objective, 3.0);
        let tie = plan(&cand(&[5.0], &[5.0])).unwrap();
        assert!(!tie.rows[0].install);
        assert!(plan(&PlanningInput { candidates: vec![] }).is_err());
        assert!(plan(&cand(&[-1.0], &[1.0])).is_err());
    }

    #[test]
    fn voll_arithmetic() {
        let profile = ShedProfile {
            objective: Objective::OptimalLoadDelivery,
            buses: vec![3, 5],
            hours: (0..4)
                .map(|t| ShedHour {
                    optimal: true,
                    dt: 1.0,
                    shed_mw: vec![if t < 3 { 2.0 } else { 0.0 }, 0.0],
                })
                .collect(),
        };
        let v = voll_cost(&profile, 1000.0).unwrap();
        assert_eq!(v[&3], 6000.0);
        assert_eq!(v[&5], 0.0);
        let eco = ShedProfile {
            objective: Objective::Economic,
            ..profile
        };
        assert!(voll_cost(&eco, 1000.0).is_err());
    }

    #[test]
    fn comparison_guards() {
        let c = economic_comparison(&summary(7045.99, 71.74), &summary(8605.34, 87.81));
        assert!((c.delta_cost - 1559.35).abs() < 1e-6);
        assert!((c.recovered - 16.07).abs() < 1e-9);
        assert!((c.price.unwrap() - 97.04).abs() < 0.01);
        assert!(c.narrative().contains("per MW of recovered demand"));
        let same = economic_comparison(&summary(1.0, 2.0), &summary(1.0, 2.0));
        assert_eq!((same.delta_cost, same.recovered, same.price), (0.0, 0.0, None));
        assert!(same.narrative().contains("No recovery needed"));
        let cheaper = economic_comparison(&summary(10.0, 5.0), &summary(8.0, 6.0));
        assert_eq!(cheaper.price, Some(-2.0));
        assert!(cheaper.narrative().contains("less than load shedding"));
        assert!(cheaper.narrative().contains("per MW of recovered demand"));
        let worse = economic_comparison(&summary(1.0, 5.0), &summary(1.0, 4.0));
        assert!(worse.anomalous && worse.price.is_none());
    }
}
