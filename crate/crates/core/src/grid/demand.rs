use std::collections::BTreeMap;

use super::{BusId, Network};
use crate::error::{Error, Result};

/// Hourly per-bus demand. Hours whose records contain a non-finite value
/// (e.g. `nan` from a recorder gap) are kept but marked invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    buses: Vec<BusId>,
    p_d: Vec<Vec<f64>>,
    q_d: Vec<Vec<f64>>,
    valid: Vec<bool>,
    dt: f64,
}

impl DemandSeries {
    /// `loads[t]` lists `(bus, p_mw, q_mvar)` for hour `t`; absent pairs are zero.
    pub fn new(loads: Vec<Vec<(BusId, f64, f64)>>, dt: f64) -> Result<Self> {
        let mut buses: Vec<BusId> = loads.iter().flatten().map(|r| r.0).collect();
        buses.sort_unstable();
        buses.dedup();
        let col: BTreeMap<BusId, usize> = buses.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let horizon = loads.len();
        let mut s = DemandSeries {
            p_d: vec![vec![0.0; buses.len()]; horizon],
            q_d: vec![vec![0.0; buses.len()]; horizon],
            valid: vec![true; horizon],
            buses,
            dt,
        };
        for (t, recs) in loads.iter().enumerate() {
            for &(bus, p, q) in recs {
                let k = col[&bus];
                if !p.is_finite() || !q.is_finite() {
                    s.valid[t] = false;
                    continue;
                }
                if p < 0.0 {
                    return Err(Error::InvalidDemand(format!(
                        "negative real demand {p} MW at bus {bus}, hour {t}"
                    )));
                }
                s.p_d[t][k] += p;
                s.q_d[t][k] += q;
            }
        }
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.p_d.is_empty() {
            return Err(Error::InvalidDemand("horizon must be at least one step".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidDemand(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.p_d.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        self.dt = dt;
        self.check()?;
        Ok(self)
    }

    pub fn is_valid(&self, hour: usize) -> bool {
        self.valid[hour]
    }

    pub fn valid_hours(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Buses that appear in the file, ascending.
    pub fn buses(&self) -> &[BusId] {
        &self.buses
    }

    /// `(p_mw, q_mvar)` at `bus` in `hour`; zero when absent.
    pub fn load(&self, hour: usize, bus: BusId) -> (f64, f64) {
        match self.buses.binary_search(&bus) {
            Ok(k) => (self.p_d[hour][k], self.q_d[hour][k]),
            Err(_) => (0.0, 0.0),
        }
    }

    pub fn total_p(&self, hour: usize) -> f64 {
        self.p_d[hour].iter().sum()
    }

    /// Per-network-bus `(p, q)` vectors for `hour`, in network bus order.
    pub fn bus_vectors(&self, net: &Network, hour: usize) -> (Vec<f64>, Vec<f64>) {
        net.buses()
            .iter()
            .map(|b| self.load(hour, b.id))
            .unzip()
    }

    /// Every demand bus must exist in `net` and be energized.
    pub fn check_against(&self, net: &Network) -> Result<()> {
        for &bus in &self.buses {
            let idx = net.bus_index(bus).ok_or_else(|| Error::DanglingBus {
                context: "demand file".into(),
                bus,
            })?;
            let loaded = (0..self.horizon()).any(|t| {
                let (p, q) = self.load(t, bus);
                p != 0.0 || q != 0.0
            });
            if loaded && !net.energized()[idx] {
                return Err(Error::MultiIsland(format!(
                    "demand at bus {bus} which is not connected to the slack bus"
                )));
            }
        }
        Ok(())
    }

    /// Copy with every load multiplied by `factor` in hours selected by `pick`.
    pub fn scaled(&self, factor: f64, pick: impl Fn(usize) -> bool) -> Self {
        let mut s = self.clone();
        for t in 0..s.horizon() {
            if pick(t) {
                s.p_d[t].iter_mut().for_each(|p| *p *= factor);
                s.q_d[t].iter_mut().for_each(|q| *q *= factor);
            }
        }
        s
    }

    /// Writes the `hour,bus_id,p_mw,q_mvar` CSV form. Invalid hours are
    /// written with `nan` so they stay invalid on re-read.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hour,bus_id,p_mw,q_mvar\n");
        for t in 0..self.horizon() {
            for (k, bus) in self.buses.iter().enumerate() {
                if self.valid[t] {
                    out.push_str(&format!("{t},{bus},{},{}\n", self.p_d[t][k], self.q_d[t][k]));
                } else {
                    out.push_str(&format!("{t},{bus},nan,nan\n"));
                }
            }
        }
        out
    }
}

/// Parses the `hour,bus_id,p_mw,q_mvar` demand CSV. Hours run from 0 to the
/// largest hour present; missing `(hour, bus)` pairs are zero.
pub fn parse_demand(text: &str, dt: f64) -> Result<DemandSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Syntax {
        line: 1,
        msg: e.to_string(),
    })?;
    let want = ["hour", "bus_id", "p_mw", "q_mvar"];
    if headers.iter().collect::<Vec<_>>() != want {
        return Err(Error::Syntax {
            line: 1,
            msg: format!("expected header {}", want.join(",")),
        });
    }

    let mut rows: BTreeMap<(usize, BusId), (f64, f64)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Syntax {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<&str> {
            rec.get(i).ok_or_else(|| Error::Syntax {
                line,
                msg: format!("missing `{name}`"),
            })
        };
        let bad = |name: &str, v: &str| Error::Syntax {
            line,
            msg: format!("cannot parse `{name}` from {v:?}"),
        };
        let hour_s = field(0, "hour")?;
        let hour: usize = hour_s.parse().map_err(|_| bad("hour", hour_s))?;
        let bus_s = field(1, "bus_id")?;
        let bus: BusId = bus_s.parse().map_err(|_| bad("bus_id", bus_s))?;
        let num = |i: usize, name: &str| -> Result<f64> {
            let s = field(i, name)?;
            if s.is_empty() {
                return Ok(f64::NAN);
            }
            s.parse().map_err(|_| bad(name, s))
        };
        let p = num(2, "p_mw")?;
        let q = num(3, "q_mvar")?;
        if p < 0.0 {
            return Err(Error::Syntax {
                line,
                msg: format!("negative real demand {p} MW"),
            });
        }
        if rows.insert((hour, bus), (p, q)).is_some() {
            return Err(Error::Syntax {
                line,
                msg: format!("duplicate record for hour {hour}, bus {bus}"),
            });
        }
    }
    let horizon = rows.keys().map(|(h, _)| h + 1).max().unwrap_or(0);
    let mut loads = vec![Vec::new(); horizon];
    for ((h, bus), (p, q)) in rows {
        loads[h].push((bus, p, q));
    }
    DemandSeries::new(loads, dt)
}
