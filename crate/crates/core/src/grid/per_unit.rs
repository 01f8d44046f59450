use super::{DemandSeries, Network};
use crate::error::{Error, Result};

/// Power quantities of a network + demand pair, in network bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerArrays {
    /// `[hour][bus]`
    pub p_d: Vec<Vec<f64>>,
    pub q_d: Vec<Vec<f64>>,
    /// `[unit][hour]`
    pub pv_p: Vec<Vec<f64>>,
    /// `[gen] -> (p_min, p_max, q_min, q_max)`
    pub gen_limits: Vec<[f64; 4]>,
}

impl PowerArrays {
    /// Physical (MW / Mvar) arrays straight from the inputs.
    pub fn physical(net: &Network, demand: &DemandSeries) -> Self {
        let (p_d, q_d) = (0..demand.horizon())
            .map(|t| demand.bus_vectors(net, t))
            .unzip();
        PowerArrays {
            p_d,
            q_d,
            pv_p: net.pv_units().iter().map(|u| u.p_profile.clone()).collect(),
            gen_limits: net
                .generators()
                .iter()
                .map(|g| [g.p_min, g.p_max, g.q_min, g.q_max])
                .collect(),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let m2 = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.iter().map(|r| r.iter().map(|x| f(*x)).collect()).collect()
        };
        PowerArrays {
            p_d: m2(&self.p_d),
            q_d: m2(&self.q_d),
            pv_p: m2(&self.pv_p),
            gen_limits: self
                .gen_limits
                .iter()
                .map(|l| [f(l[0]), f(l[1]), f(l[2]), f(l[3])])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerUnitSeries {
    pub s_base: f64,
    pub values: PowerArrays,
}

pub fn to_per_unit(net: &Network, demand: &DemandSeries) -> Result<PerUnitSeries> {
    let s_base = net.s_base();
    if !(s_base > 0.0) {
        return Err(Error::InvalidNetwork(format!(
            "system base must be positive, got {s_base}"
        )));
    }
    Ok(PerUnitSeries {
        s_base,
        values: PowerArrays::physical(net, demand).map(|x| x / s_base),
    })
}

pub fn from_per_unit(pu: &PerUnitSeries) -> PowerArrays {
    pu.values.map(|x| x * pu.s_base)
}
