//! Line-oriented network file format.
//!
//! ```text
//! # comment (anywhere; runs to end of line)
//! BASE_MVA <s_base>
//! BUS
//! <id> <slack|pv|pq> <v_min> <v_max> <base_kv>
//! BRANCH
//! <from> <to> <r> <x> <b_sh> <closed|open>
//! GEN
//! <bus> <p_min> <p_max> <q_min> <q_max> <c2> <c1> <c0>
//! PV
//! <bus> <pf> <leading|lagging> <p_0> <p_1> ... <p_T-1>
//! SHUNT
//! <bus> <b_cap>
//! ```
//!
//! Impedances and susceptances are per-unit on `BASE_MVA`; powers are MW and
//! Mvar; cost coefficients are $/MW^2h, $/MWh and $/h. Section keywords and
//! enum tokens are case-insensitive. Sections may appear in any order and
//! more than once.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{
    Branch, BranchStatus, Bus, BusId, BusKind, Generator, Network, PfSign, PvUnit,
    QuadraticCost, ShuntCapacitor,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
enum Section {
    Bus,
    Branch,
    Gen,
    Pv,
    Shunt,
}

struct Fields<'a> {
    line: usize,
    toks: std::slice::Iter<'a, &'a str>,
}

impl<'a> Fields<'a> {
    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.toks.next().ok_or_else(|| Error::Syntax {
            line: self.line,
            msg: format!("missing field `{what}`"),
        })?;
        tok.parse().map_err(|_| Error::Syntax {
            line: self.line,
            msg: format!("cannot parse `{what}` from {tok:?}"),
        })
    }

    fn finish(mut self) -> Result<()> {
        match self.toks.next() {
            None => Ok(()),
            Some(extra) => Err(Error::Syntax {
                line: self.line,
                msg: format!("unexpected trailing field {extra:?}"),
            }),
        }
    }
}

fn kind_from(tok: &str, line: usize) -> Result<BusKind> {
    match tok.to_ascii_lowercase().as_str() {
        "slack" | "ref" => Ok(BusKind::Slack),
        "pv" => Ok(BusKind::PV),
        "pq" => Ok(BusKind::PQ),
        _ => Err(Error::Syntax {
            line,
            msg: format!("unknown bus kind {tok:?}"),
        }),
    }
}

fn status_from(tok: &str, line: usize) -> Result<BranchStatus> {
    match tok.to_ascii_lowercase().as_str() {
        "closed" | "1" => Ok(BranchStatus::Closed),
        "open" | "0" => Ok(BranchStatus::Open),
        _ => Err(Error::Syntax {
            line,
            msg: format!("unknown branch status {tok:?}"),
        }),
    }
}

pub fn parse_network(text: &str) -> Result<Network> {
    let mut section = None;
    let mut s_base = None;
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut gens = Vec::new();
    let mut pvs = Vec::new();
    let mut shunts = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let head = toks[0].to_ascii_uppercase();
        let header = match head.as_str() {
            "BUS" => Some(Section::Bus),
            "BRANCH" => Some(Section::Branch),
            "GEN" => Some(Section::Gen),
            "PV" if toks.len() == 1 => Some(Section::Pv),
            "SHUNT" => Some(Section::Shunt),
            _ => None,
        };
        if let Some(h) = header {
            if toks.len() != 1 {
                return Err(Error::Syntax {
                    line,
                    msg: format!("section keyword {head} takes no arguments"),
                });
            }
            section = Some(h);
            continue;
        }
        if head == "BASE_MVA" {
            let mut f = Fields {
                line,
                toks: toks[1..].iter(),
            };
            let v: f64 = f.next("s_base")?;
            f.finish()?;
            if s_base.replace(v).is_some() {
                return Err(Error::Syntax {
                    line,
                    msg: "BASE_MVA given twice".into(),
                });
            }
            continue;
        }

        let Some(sec) = section else {
            return Err(Error::Syntax {
                line,
                msg: "record outside of any section".into(),
            });
        };
        let mut f = Fields {
            line,
            toks: toks.iter(),
        };
        match sec {
            Section::Bus => {
                let id: BusId = f.next("id")?;
                let kind = kind_from(&f.next::<String>("kind")?, line)?;
                buses.push(Bus {
                    id,
                    kind,
                    v_min: f.next("v_min")?,
                    v_max: f.next("v_max")?,
                    base_kv: f.next("base_kv")?,
                });
                f.finish()?;
            }
            Section::Branch => {
                let from = f.next("from")?;
                let to = f.next("to")?;
                let r = f.next("r")?;
                let x = f.next("x")?;
                let b_sh = f.next("b_sh")?;
                let status = status_from(&f.next::<String>("status")?, line)?;
                f.finish()?;
                branches.push(Branch {
                    from,
                    to,
                    r,
                    x,
                    b_sh,
                    status,
                });
            }
            Section::Gen => {
                let g = Generator {
                    bus: f.next("bus")?,
                    p_min: f.next("p_min")?,
                    p_max: f.next("p_max")?,
                    q_min: f.next("q_min")?,
                    q_max: f.next("q_max")?,
                    cost: QuadraticCost {
                        c2: f.next("c2")?,
                        c1: f.next("c1")?,
                        c0: f.next("c0")?,
                    },
                };
                f.finish()?;
                gens.push(g);
            }
            Section::Pv => {
                let bus = f.next("bus")?;
                let pf_nominal = f.next("pf")?;
                let sign: String = f.next("sign")?;
                let pf_sign = PfSign::from_str(&sign).map_err(|_| Error::Syntax {
                    line,
                    msg: format!("unknown power factor sign {sign:?}"),
                })?;
                let mut p_profile = Vec::new();
                while f.toks.len() > 0 {
                    p_profile.push(f.next("p_profile")?);
                }
                pvs.push(PvUnit {
                    bus,
                    p_profile,
                    pf_nominal,
                    pf_sign,
                });
            }
            Section::Shunt => {
                let sh = ShuntCapacitor {
                    bus: f.next("bus")?,
                    b_cap: f.next("b_cap")?,
                };
                f.finish()?;
                shunts.push(sh);
            }
        }
    }

    let s_base = s_base.ok_or_else(|| Error::Syntax {
        line: text.lines().count().max(1),
        msg: "missing BASE_MVA".into(),
    })?;
    Network::new(buses, branches, gens, pvs, shunts, s_base)
}

/// Inverse of [`parse_network`]; float fields use shortest round-trip formatting.
pub fn serialize_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "BASE_MVA {}", net.s_base());
    out.push_str("BUS\n");
    for b in net.buses() {
        let kind = match b.kind {
            BusKind::Slack => "slack",
            BusKind::PV => "pv",
            BusKind::PQ => "pq",
        };
        let _ = writeln!(out, "{} {} {} {} {}", b.id, kind, b.v_min, b.v_max, b.base_kv);
    }
    out.push_str("BRANCH\n");
    for br in net.branches() {
        let st = match br.status {
            BranchStatus::Closed => "closed",
            BranchStatus::Open => "open",
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            br.from, br.to, br.r, br.x, br.b_sh, st
        );
    }
    out.push_str("GEN\n");
    for g in net.generators() {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            g.bus, g.p_min, g.p_max, g.q_min, g.q_max, g.cost.c2, g.cost.c1, g.cost.c0
        );
    }
    out.push_str("PV\n");
    for pv in net.pv_units() {
        let _ = write!(out, "{} {} {}", pv.bus, pv.pf_nominal, pv.pf_sign.as_str());
        for p in &pv.p_profile {
            let _ = write!(out, " {p}");
        }
        out.push('\n');
    }
    out.push_str("SHUNT\n");
    for sh in net.shunts() {
        let _ = writeln!(out, "{} {}", sh.bus, sh.b_cap);
    }
    out
}
