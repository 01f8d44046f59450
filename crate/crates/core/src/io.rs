//! CSV artifacts of a study, their readers, and the text report.
//!
//! Floats are written in shortest round-trip form so every file re-parses to
//! the exact values that produced it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acopf::{Objective, SolveStatus};
use crate::error::{Error, Result};
use crate::grid::{BusId, Network};
use crate::planning::{economic_comparison, EconomicComparison, PlanRow, PlanningDecision};
use crate::sensitivity::{RecordStatus, SensitivityRecord};
use crate::study::{
    CaseId, CaseResult, CaseSummary, HourStatus, ShedHour, ShedProfile, StudyConfig, StudyResult,
};

pub const CROSS_CASE: &str = "cross_case.csv";
pub const PLACEMENT: &str = "placement.csv";
pub const RANK_TABLE: &str = "rank_table.csv";
pub const DISPATCH_LONG: &str = "dispatch_long.csv";
pub const STUDY_META: &str = "study.toml";
pub const SUMMARY: &str = "summary.txt";
pub const RANKING_LONG: &str = "ranking_long.csv";

pub const HOURLY_COLUMNS: [&str; 13] = [
    "hour", "status", "objective", "dt", "p_demand", "p_served", "p_shed", "gen_cost", "mismatch",
    "v_min", "v_max", "pv_p", "pv_q",
];
pub const SENSITIVITY_COLUMNS: [&str; 7] =
    ["hour", "bus_id", "os_q", "os_v", "s_score", "rank", "status"];
pub const RANKING_COLUMNS: [&str; 6] = ["bus_id", "os_q", "os_v", "s_score", "rank", "status"];
pub const CROSS_CASE_COLUMNS: [&str; 8] = [
    "case", "total_cost", "load_served", "load_shed", "avg_mismatch", "avg_vmin", "avg_vmax",
    "top_cap_buses",
];
pub const DISPATCH_COLUMNS: [&str; 5] = ["case", "hour", "bus_id", "quantity", "value"];
pub const PLAN_COLUMNS: [&str; 5] = ["bus_id", "c_cap", "c_voll", "install", "s_score"];

pub fn hourly_file(case: CaseId) -> String {
    format!("case{}_hourly.csv", case.number())
}

pub fn sensitivity_file(case: CaseId) -> String {
    format!("case{}_sensitivity.csv", case.number())
}

pub fn ranking_file(case: CaseId) -> String {
    format!("case{}_ranking.csv", case.number())
}

/// Every file `write_study` emits.
pub fn study_files() -> Vec<String> {
    let mut out = Vec::new();
    for c in CaseId::ALL {
        out.push(hourly_file(c));
        out.push(sensitivity_file(c));
        out.push(ranking_file(c));
    }
    for f in [CROSS_CASE, PLACEMENT, RANK_TABLE, DISPATCH_LONG, STUDY_META] {
        out.push(f.to_string());
    }
    out
}

/// Shortest round-trip decimal; `-0` prints as `0`, NaN as `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_hour_status(s: &str) -> Option<HourStatus> {
    Some(match s {
        "optimal" => HourStatus::Solved(SolveStatus::Optimal),
        "max_iterations" => HourStatus::Solved(SolveStatus::MaxIterations),
        "infeasible" => HourStatus::Solved(SolveStatus::Infeasible),
        "excluded" => HourStatus::Excluded,
        _ => return None,
    })
}

/// Settings and outcome flags of a study run, stored next to its CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyMeta {
    pub stress_pf: f64,
    pub stress_sign: String,
    pub w_q: f64,
    pub w_v: f64,
    pub aggregation: String,
    pub top_m: usize,
    pub cap_mvar: f64,
    pub case4_stressed: bool,
    pub voll_rate: f64,
    pub dt: f64,
    pub cap_buses: Vec<BusId>,
    pub capacitors_insufficient: bool,
    pub warnings: Vec<String>,
}

impl StudyMeta {
    pub fn new(config: &StudyConfig, result: &StudyResult, dt: f64) -> Self {
        StudyMeta {
            stress_pf: config.stress.pf,
            stress_sign: config.stress.sign.as_str().into(),
            w_q: config.weights.w_q,
            w_v: config.weights.w_v,
            aggregation: config.aggregation.as_str().into(),
            top_m: result.top_m,
            cap_mvar: config.cap_mvar,
            case4_stressed: config.case4_stressed,
            voll_rate: config.options.voll_rate,
            dt,
            cap_buses: result.cap_buses.clone(),
            capacitors_insufficient: result.capacitors_insufficient,
            warnings: result.warnings.clone(),
        }
    }
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(header.iter().map(|h| h.as_ref()))
            .expect("in-memory write");
        Table { w }
    }

    fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.w
            .write_record(fields.iter().map(|f| f.as_ref()))
            .expect("in-memory write");
    }

    fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn hourly_csv(case: &CaseResult) -> String {
    let mut header: Vec<String> = HOURLY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(case.bus_ids.iter().map(|b| format!("shed_{b}")));
    let mut t = Table::new(&header);
    for h in &case.hours {
        let cost = h.solution.as_ref().map_or(f64::NAN, |s| s.generation_cost);
        let mut row = vec![
            h.hour.to_string(),
            h.status.as_str().to_string(),
            case.objective.as_str().to_string(),
            fmt_f64(case.dt),
            fmt_f64(h.p_demand()),
            fmt_f64(h.p_served()),
            fmt_f64(h.p_shed_total()),
            fmt_f64(cost),
            fmt_f64(h.mismatch),
            fmt_f64(h.v_min),
            fmt_f64(h.v_max),
            fmt_f64(h.pv_p),
            fmt_f64(h.pv_q),
        ];
        row.extend(h.p_shed.iter().map(|s| fmt_f64(*s)));
        t.row(&row);
    }
    t.finish()
}

fn record_fields(r: &SensitivityRecord) -> [String; 6] {
    [
        r.bus_id.to_string(),
        fmt_f64(r.os_q),
        fmt_f64(r.os_v),
        fmt_f64(r.s_score),
        r.rank.to_string(),
        r.status.as_str().to_string(),
    ]
}

pub fn sensitivity_csv(case: &CaseResult) -> String {
    let mut t = Table::new(&SENSITIVITY_COLUMNS);
    for h in &case.hours {
        for r in &h.sensitivity {
            let mut row = vec![h.hour.to_string()];
            row.extend(record_fields(r));
            t.row(&row);
        }
    }
    t.finish()
}

pub fn ranking_csv(records: &[SensitivityRecord]) -> String {
    let mut t = Table::new(&RANKING_COLUMNS);
    for r in records {
        t.row(&record_fields(r));
    }
    t.finish()
}

fn join_buses(b: &[BusId]) -> String {
    b.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn cross_case_csv(summaries: &[CaseSummary]) -> String {
    let mut t = Table::new(&CROSS_CASE_COLUMNS);
    for s in summaries {
        t.row(&[
            s.case.clone(),
            fmt_f64(s.total_cost),
            fmt_f64(s.load_served),
            fmt_f64(s.load_shed),
            fmt_f64(s.avg_mismatch),
            fmt_f64(s.avg_vmin),
            fmt_f64(s.avg_vmax),
            join_buses(&s.top_cap_buses),
        ]);
    }
    t.finish()
}

pub fn rank_table_csv(result: &StudyResult) -> String {
    let table = &result.rank_table;
    let mut header = vec!["bus_id".to_string()];
    header.extend(table.cases.iter().cloned());
    let mut t = Table::new(&header);
    for (b, ranks) in table.buses.iter().zip(&table.ranks) {
        let mut row = vec![b.to_string()];
        row.extend(ranks.iter().map(|r| r.to_string()));
        t.row(&row);
    }
    t.finish()
}

/// Long-format per-hour dispatch for plotting: generator output, bus
/// voltages, shed power and nodal prices.
pub fn dispatch_long_csv(cases: &[CaseResult], network: &Network) -> String {
    let mut t = Table::new(&DISPATCH_COLUMNS);
    for c in cases {
        for h in &c.hours {
            let Some(sol) = &h.solution else { continue };
            let mut push = |bus: BusId, q: &str, v: f64| {
                t.row(&[
                    c.case.name().to_string(),
                    h.hour.to_string(),
                    bus.to_string(),
                    q.to_string(),
                    fmt_f64(v),
                ]);
            };
            for (g, gen) in network.generators().iter().enumerate() {
                push(gen.bus, "p_gen", sol.p_g[g]);
                push(gen.bus, "q_gen", sol.q_g[g]);
            }
            for (i, b) in c.bus_ids.iter().enumerate() {
                if !c.energized[i] {
                    continue;
                }
                push(*b, "v", sol.v[i]);
                push(*b, "theta_deg", sol.theta[i].to_degrees());
                push(*b, "p_shed", h.p_shed[i]);
                push(*b, "lambda_p", sol.lambda_p_per_mw()[i]);
                push(*b, "lambda_q", sol.lambda_q_per_mvar()[i]);
            }
        }
    }
    t.finish()
}

/// `plan.csv`, one row per candidate.
pub fn plan_csv(decision: &PlanningDecision, s_scores: &BTreeMap<BusId, f64>) -> String {
    let mut t = Table::new(&PLAN_COLUMNS);
    for r in &decision.rows {
        t.row(&[
            r.bus_id.to_string(),
            fmt_f64(r.c_cap),
            fmt_f64(r.c_voll),
            u8::from(r.install).to_string(),
            fmt_f64(s_scores.get(&r.bus_id).copied().unwrap_or(0.0)),
        ]);
    }
    t.finish()
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| Error::io(&p, e))
}

/// Writes the full artifact set of `study_files` into `dir`.
pub fn write_study(dir: &Path, result: &StudyResult, network: &Network, meta: &StudyMeta) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for c in &result.cases {
        write(dir, &hourly_file(c.case), &hourly_csv(c))?;
        write(dir, &sensitivity_file(c.case), &sensitivity_csv(c))?;
        write(dir, &ranking_file(c.case), &ranking_csv(&c.ranking.records))?;
    }
    write(dir, CROSS_CASE, &cross_case_csv(&result.summaries()))?;
    write(dir, PLACEMENT, &ranking_csv(&result.placement_ranking))?;
    write(dir, RANK_TABLE, &rank_table_csv(result))?;
    write(dir, DISPATCH_LONG, &dispatch_long_csv(&result.cases, network))?;
    let meta = toml::to_string(meta).map_err(|e| Error::format(dir.join(STUDY_META), e.to_string()))?;
    write(dir, STUDY_META, &meta)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

struct Rows<'a> {
    label: &'a str,
    header: Vec<String>,
    records: Vec<csv::StringRecord>,
}

fn rows<'a>(text: &str, label: &'a str, expected: &[&str]) -> Result<Rows<'a>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::format(label, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::format(
            label,
            format!("header must start with {}", expected.join(",")),
        ));
    }
    let records = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(label, e.to_string()))?;
    Ok(Rows {
        label,
        header,
        records,
    })
}

impl Rows<'_> {
    fn err(&self, row: usize, msg: impl std::fmt::Display) -> Error {
        Error::format(self.label, format!("line {}: {msg}", row + 2))
    }

    fn parse<T: std::str::FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let field = self.records[row].get(col).unwrap_or("");
        field
            .parse()
            .map_err(|_| self.err(row, format!("bad {} value {field:?}", self.header[col])))
    }

    fn text(&self, row: usize, col: usize) -> &str {
        self.records[row].get(col).unwrap_or("")
    }
}

fn parse_record(rows: &Rows, i: usize, off: usize) -> Result<SensitivityRecord> {
    let status: RecordStatus = rows
        .text(i, off + 5)
        .parse()
        .map_err(|e| rows.err(i, e))?;
    Ok(SensitivityRecord {
        bus_id: rows.parse(i, off)?,
        os_q: rows.parse(i, off + 1)?,
        os_v: rows.parse(i, off + 2)?,
        s_score: rows.parse(i, off + 3)?,
        rank: rows.parse(i, off + 4)?,
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRow {
    pub hour: usize,
    pub status: HourStatus,
    pub objective: Objective,
    pub dt: f64,
    pub p_demand: f64,
    pub p_served: f64,
    pub p_shed: f64,
    pub gen_cost: f64,
    pub mismatch: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub pv_p: f64,
    pub pv_q: f64,
    /// MW per bus in `HourlyTable::bus_ids` order.
    pub shed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyTable {
    pub bus_ids: Vec<BusId>,
    pub rows: Vec<HourlyRow>,
}

impl HourlyTable {
    pub fn shed_profile(&self) -> Result<ShedProfile> {
        let objective = match self.rows.first() {
            Some(r) => r.objective,
            None => return Err(Error::Contract("hourly table has no rows".into())),
        };
        if self.rows.iter().any(|r| r.objective != objective) {
            return Err(Error::Contract("hourly table mixes objectives".into()));
        }
        Ok(ShedProfile {
            objective,
            buses: self.bus_ids.clone(),
            hours: self
                .rows
                .iter()
                .map(|r| ShedHour {
                    optimal: r.status.is_optimal(),
                    dt: r.dt,
                    shed_mw: r.shed.clone(),
                })
                .collect(),
        })
    }
}

pub fn parse_hourly(text: &str, label: &str) -> Result<HourlyTable> {
    let rows = rows(text, label, &HOURLY_COLUMNS)?;
    let n = HOURLY_COLUMNS.len();
    let bus_ids = rows.header[n..]
        .iter()
        .map(|h| {
            h.strip_prefix("shed_")
                .and_then(|b| b.parse().ok())
                .ok_or_else(|| Error::format(label, format!("unexpected column {h:?}")))
        })
        .collect::<Result<Vec<BusId>>>()?;
    let mut out = Vec::with_capacity(rows.records.len());
    for i in 0..rows.records.len() {
        if rows.records[i].len() != rows.header.len() {
            return Err(rows.err(i, "wrong number of fields"));
        }
        let status = parse_hour_status(rows.text(i, 1))
            .ok_or_else(|| rows.err(i, format!("unknown status {:?}", rows.text(i, 1))))?;
        let objective: Objective = rows.text(i, 2).parse().map_err(|e| rows.err(i, e))?;
        out.push(HourlyRow {
            hour: rows.parse(i, 0)?,
            status,
            objective,
            dt: rows.parse(i, 3)?,
            p_demand: rows.parse(i, 4)?,
            p_served: rows.parse(i, 5)?,
            p_shed: rows.parse(i, 6)?,
            gen_cost: rows.parse(i, 7)?,
            mismatch: rows.parse(i, 8)?,
            v_min: rows.parse(i, 9)?,
            v_max: rows.parse(i, 10)?,
            pv_p: rows.parse(i, 11)?,
            pv_q: rows.parse(i, 12)?,
            shed: (n..rows.header.len())
                .map(|c| rows.parse(i, c))
                .collect::<Result<_>>()?,
        });
    }
    Ok(HourlyTable { bus_ids, rows: out })
}

pub fn read_hourly(path: &Path) -> Result<HourlyTable> {
    parse_hourly(&read(path)?, &path.display().to_string())
}

/// `(hour, record)` pairs.
pub fn parse_sensitivity(text: &str, label: &str) -> Result<Vec<(usize, SensitivityRecord)>> {
    let rows = rows(text, label, &SENSITIVITY_COLUMNS)?;
    (0..rows.records.len())
        .map(|i| Ok((rows.parse(i, 0)?, parse_record(&rows, i, 1)?)))
        .collect()
}

pub fn read_sensitivity(path: &Path) -> Result<Vec<(usize, SensitivityRecord)>> {
    parse_sensitivity(&read(path)?, &path.display().to_string())
}

pub fn parse_ranking(text: &str, label: &str) -> Result<Vec<SensitivityRecord>> {
    let rows = rows(text, label, &RANKING_COLUMNS)?;
    (0..rows.records.len())
        .map(|i| parse_record(&rows, i, 0))
        .collect()
}

pub fn read_ranking(path: &Path) -> Result<Vec<SensitivityRecord>> {
    parse_ranking(&read(path)?, &path.display().to_string())
}

pub fn parse_cross_case(text: &str, label: &str) -> Result<Vec<CaseSummary>> {
    let rows = rows(text, label, &CROSS_CASE_COLUMNS)?;
    (0..rows.records.len())
        .map(|i| {
            let top = rows
                .text(i, 7)
                .split_whitespace()
                .map(|b| b.parse().map_err(|_| rows.err(i, format!("bad bus id {b:?}"))))
                .collect::<Result<Vec<BusId>>>()?;
            Ok(CaseSummary {
                case: rows.text(i, 0).to_string(),
                total_cost: rows.parse(i, 1)?,
                load_served: rows.parse(i, 2)?,
                load_shed: rows.parse(i, 3)?,
                avg_mismatch: rows.parse(i, 4)?,
                avg_vmin: rows.parse(i, 5)?,
                avg_vmax: rows.parse(i, 6)?,
                top_cap_buses: top,
            })
        })
        .collect()
}

pub fn read_cross_case(path: &Path) -> Result<Vec<CaseSummary>> {
    parse_cross_case(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchPoint {
    pub case: String,
    pub hour: usize,
    pub bus_id: BusId,
    pub quantity: String,
    pub value: f64,
}

pub fn parse_dispatch_long(text: &str, label: &str) -> Result<Vec<DispatchPoint>> {
    let rows = rows(text, label, &DISPATCH_COLUMNS)?;
    (0..rows.records.len())
        .map(|i| {
            Ok(DispatchPoint {
                case: rows.text(i, 0).to_string(),
                hour: rows.parse(i, 1)?,
                bus_id: rows.parse(i, 2)?,
                quantity: rows.text(i, 3).to_string(),
                value: rows.parse(i, 4)?,
            })
        })
        .collect()
}

pub fn read_dispatch_long(path: &Path) -> Result<Vec<DispatchPoint>> {
    parse_dispatch_long(&read(path)?, &path.display().to_string())
}

/// Plan rows with the score each candidate carried.
pub fn parse_plan(text: &str, label: &str) -> Result<Vec<(PlanRow, f64)>> {
    let rows = rows(text, label, &PLAN_COLUMNS)?;
    (0..rows.records.len())
        .map(|i| {
            let install = match rows.text(i, 3) {
                "1" => true,
                "0" => false,
                other => return Err(rows.err(i, format!("install must be 0 or 1, got {other:?}"))),
            };
            Ok((
                PlanRow {
                    bus_id: rows.parse(i, 0)?,
                    c_cap: rows.parse(i, 1)?,
                    c_voll: rows.parse(i, 2)?,
                    install,
                },
                rows.parse(i, 4)?,
            ))
        })
        .collect()
}

pub fn read_plan(path: &Path) -> Result<Vec<(PlanRow, f64)>> {
    parse_plan(&read(path)?, &path.display().to_string())
}

pub fn read_meta(path: &Path) -> Result<StudyMeta> {
    toml::from_str(&read(path)?).map_err(|e| Error::format(path, e.to_string()))
}

pub fn missing_files(dir: &Path) -> Vec<String> {
    study_files()
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect()
}

pub fn check_study_dir(dir: &Path) -> Result<()> {
    let missing = missing_files(dir);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingFiles {
            dir: dir.display().to_string(),
            files: missing,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub comparison: EconomicComparison,
    pub summaries: Vec<CaseSummary>,
}

fn find_case<'a>(summaries: &'a [CaseSummary], id: CaseId, dir: &Path) -> Result<&'a CaseSummary> {
    summaries
        .iter()
        .find(|s| s.case == id.name())
        .ok_or_else(|| Error::format(dir.join(CROSS_CASE), format!("no row for case {}", id.name())))
}

/// Builds the summary text of a complete study directory.
pub fn build_report(dir: &Path) -> Result<Report> {
    check_study_dir(dir)?;
    let summaries = read_cross_case(&dir.join(CROSS_CASE))?;
    let meta = read_meta(&dir.join(STUDY_META))?;
    let c3 = find_case(&summaries, CaseId::Old, dir)?;
    let c4 = find_case(&summaries, CaseId::CapEnhanced, dir)?;
    let comparison = economic_comparison(c3, c4);

    let mut text = String::new();
    text.push_str("Four-case study summary\n\n");
    text.push_str(&format!(
        "{:<3} {:<15} {:>12} {:>12} {:>10} {:>12} {:>8} {:>8}  {}\n",
        "#", "case", "cost $", "served MW", "shed MW", "mismatch", "vmin", "vmax", "top buses"
    ));
    for (i, s) in summaries.iter().enumerate() {
        text.push_str(&format!(
            "{:<3} {:<15} {:>12.2} {:>12.2} {:>10.2} {:>12.3e} {:>8.4} {:>8.4}  {}\n",
            i + 1,
            s.case,
            s.total_cost,
            s.load_served,
            s.load_shed,
            s.avg_mismatch,
            s.avg_vmin,
            s.avg_vmax,
            join_buses(&s.top_cap_buses)
        ));
    }
    text.push_str(&format!(
        "\nStress: PV power factor {} {}; weights w_q={} w_v={}.\n",
        meta.stress_pf, meta.stress_sign, meta.w_q, meta.w_v
    ));
    text.push_str(&format!(
        "Case 4 capacitors ({} Mvar each) at buses: {}.\n",
        meta.cap_mvar,
        join_buses(&meta.cap_buses)
    ));
    if meta.capacitors_insufficient {
        text.push_str("WARNING: capacitors insufficient; Case 4 still has non-optimal hours.\n");
    }
    for w in &meta.warnings {
        if !w.starts_with("capacitors insufficient") {
            text.push_str(&format!("Note: {w}\n"));
        }
    }
    text.push_str(&format!("\n{}\n", comparison.narrative()));
    Ok(Report {
        text,
        comparison,
        summaries,
    })
}

/// Long-format per-case rankings for plotting.
pub fn ranking_long_csv(dir: &Path) -> Result<String> {
    let mut t = Table::new(&["case", "bus_id", "s_score", "rank"]);
    for c in CaseId::ALL {
        for r in read_ranking(&dir.join(ranking_file(c)))? {
            t.row(&[
                c.name().to_string(),
                r.bus_id.to_string(),
                fmt_f64(r.s_score),
                r.rank.to_string(),
            ]);
        }
    }
    Ok(t.finish())
}

/// Writes `summary.txt` and `ranking_long.csv` into a study directory and
/// returns the report.
pub fn write_report(dir: &Path) -> Result<Report> {
    let report = build_report(dir)?;
    write(dir, SUMMARY, &report.text)?;
    write(dir, RANKING_LONG, &ranking_long_csv(dir)?)?;
    Ok(report)
}

/// Resolves the directory holding `case3_hourly.csv`, accepting either the
/// study directory or the file itself.
pub fn case3_dir(path: &Path) -> PathBuf {
    if path.is_file() {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}
