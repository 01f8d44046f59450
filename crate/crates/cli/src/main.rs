mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use log::info;

use config::{version_string, CommonArgs, RunConfig, StressArgs, StudyArgs};
use gridcap_core::grid::{parse_demand, parse_network};
use gridcap_core::io::{self, StudyMeta};
use gridcap_core::planning::{plan, PlanningInput};
use gridcap_core::study::{run_case, run_four_case_study, CaseId, Scenario};
use gridcap_core::{BusId, DemandSeries, Network, ShuntCapacitor};

#[derive(Parser)]
#[command(name = "gridcap", about = "AC-OPF sensitivity studies and capacitor planning for islanded microgrids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one case over the demand horizon and write its hourly CSV.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        stress: StressArgs,
        /// economic, voltage_stress, old or cap_enhanced.
        #[arg(long, default_value = "economic")]
        case: String,
        /// Capacitor buses for cap_enhanced, comma separated.
        #[arg(long, value_delimiter = ',')]
        caps: Vec<BusId>,
        #[arg(long, default_value_t = 0.5)]
        cap_mvar: f64,
        /// Hourly CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-hour sensitivities here.
        #[arg(long)]
        sensitivity: Option<PathBuf>,
    },
    /// Run the four-case study and write its artifacts into a directory.
    Study {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide capacitor installs against the lost-load cost of a load-delivery run.
    Plan {
        /// Study directory (or its case3_hourly.csv).
        #[arg(long)]
        case3: PathBuf,
        /// Capacitor cost per bus as `bus=usd,...`; `*=usd` sets every candidate.
        #[arg(long, value_delimiter = ',', required = true)]
        cap_cost: Vec<String>,
        /// Value of lost load, $/MWh.
        #[arg(long)]
        voll: f64,
        /// Candidate buses; defaults to the study's capacitor buses.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<BusId>,
        #[arg(long, default_value = "plan.csv")]
        out: PathBuf,
    },
    /// Summarize a study directory and write plot-ready CSVs.
    Report {
        dir: PathBuf,
    },
    /// Parse inputs and check their invariants without solving.
    Validate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        demand: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
    },
}

fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_network(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_demand(path: &Path, dt: f64) -> Result<DemandSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_demand(&text, dt).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    common: &CommonArgs,
    stress: &StressArgs,
    case: &str,
    caps: &[BusId],
    cap_mvar: f64,
    out: Option<PathBuf>,
    sensitivity: Option<PathBuf>,
) -> Result<ExitCode> {
    let rc = RunConfig::resolve(common, Some(stress), None, out)?;
    let case = CaseId::from_name(case)?;
    let net = load_network(&rc.network)?;
    let demand = load_demand(rc.demand.as_deref().context("no demand file given")?, rc.dt)?;
    let out = rc.out.clone().context("no output path given (--out)")?;

    let mut scenario = Scenario::new(case);
    scenario.options = rc.objective.clone();
    scenario.solver = rc.solver.clone();
    let stressed = matches!(case, CaseId::VoltageStress | CaseId::Old);
    if let Some(s) = rc.stress.or(stressed.then_some(rc.study.stress)) {
        scenario = scenario.with_uniform_pf(s, net.pv_units().len());
    }
    if !caps.is_empty() {
        let c = caps
            .iter()
            .map(|b| ShuntCapacitor::from_rating(*b, cap_mvar, net.s_base()))
            .collect();
        scenario = scenario.with_capacitors(c);
    }
    let result = run_case(&scenario, &net, &demand)?;
    write_file(&out, &io::hourly_csv(&result))?;
    if let Some(p) = sensitivity {
        write_file(&p, &io::sensitivity_csv(&result))?;
    }
    let a = &result.aggregates;
    println!(
        "{}: {} of {} valid hours optimal; cost ${:.2}; served {:.3} MW; shed {:.3} MW",
        case.name(),
        a.valid_hours - a.non_optimal_hours,
        a.valid_hours,
        a.total_cost,
        a.load_served,
        a.load_shed
    );
    Ok(if a.non_optimal_hours > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_study(common: &CommonArgs, study: &StudyArgs, out: Option<PathBuf>) -> Result<ExitCode> {
    let rc = RunConfig::resolve(common, None, Some(study), out)?;
    info!("seed {} (reserved, unused)", rc.seed);
    let net = load_network(&rc.network)?;
    let demand = load_demand(rc.demand.as_deref().context("no demand file given")?, rc.dt)?;
    let out = rc.out.clone().context("no output directory given (--out)")?;
    let result = run_four_case_study(&net, &demand, &rc.study)?;
    io::write_study(&out, &result, &net, &StudyMeta::new(&rc.study, &result, rc.dt))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    for s in result.summaries() {
        println!(
            "{:<15} cost ${:>10.2}  served {:>9.3} MW  shed {:>7.3} MW  mismatch {:.3e}",
            s.case, s.total_cost, s.load_served, s.load_shed, s.avg_mismatch
        );
    }
    println!(
        "capacitors at {:?}; artifacts in {}",
        result.cap_buses,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_cap_costs(items: &[String], candidates: &[BusId]) -> Result<BTreeMap<BusId, f64>> {
    let mut out = BTreeMap::new();
    let mut all = None;
    for item in items {
        let (bus, usd) = item
            .split_once('=')
            .with_context(|| format!("cap cost {item:?} is not bus=usd"))?;
        let usd: f64 = usd
            .trim()
            .parse()
            .with_context(|| format!("bad cost in {item:?}"))?;
        match bus.trim() {
            "*" => all = Some(usd),
            b => {
                let b: BusId = b.parse().with_context(|| format!("bad bus in {item:?}"))?;
                out.insert(b, usd);
            }
        }
    }
    if let Some(usd) = all {
        for b in candidates {
            out.entry(*b).or_insert(usd);
        }
    }
    Ok(out)
}

fn cmd_plan(case3: &Path, cap_cost: &[String], voll: f64, candidates: &[BusId], out: &Path) -> Result<ExitCode> {
    let dir = io::case3_dir(case3);
    let hourly = io::read_hourly(&dir.join(io::hourly_file(CaseId::Old)))?;
    let meta_path = dir.join(io::STUDY_META);
    let candidates = if !candidates.is_empty() {
        candidates.to_vec()
    } else if meta_path.is_file() {
        io::read_meta(&meta_path)?.cap_buses
    } else {
        bail!("no --candidates given and {} not found", meta_path.display());
    };
    let scores: BTreeMap<BusId, f64> = match dir.join(io::PLACEMENT) {
        p if p.is_file() => io::read_ranking(&p)?
            .into_iter()
            .map(|r| (r.bus_id, r.s_score))
            .collect(),
        _ => BTreeMap::new(),
    };
    let costs = parse_cap_costs(cap_cost, &candidates)?;
    let input = PlanningInput::from_shed(&hourly.shed_profile()?, voll, &costs, &candidates)?;
    let decision = plan(&input)?;
    write_file(out, &io::plan_csv(&decision, &scores))?;
    for r in &decision.rows {
        println!(
            "bus {:>5}: capacitor ${:.2} vs lost load ${:.2} -> {}",
            r.bus_id,
            r.c_cap,
            r.c_voll,
            if r.install { "install" } else { "skip" }
        );
    }
    println!("planning objective ${:.2}", decision.objective);
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(dir: &Path) -> Result<ExitCode> {
    let report = io::write_report(dir)?;
    print!("{}", report.text);
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(network: &Path, demand: Option<&Path>, dt: f64) -> Result<ExitCode> {
    let net = load_network(network)?;
    let closed = net
        .branches()
        .iter()
        .filter(|b| b.status == gridcap_core::BranchStatus::Closed)
        .count();
    let dead = net.energized().iter().filter(|e| !**e).count();
    println!(
        "{}: {} buses ({dead} de-energized), {} branches ({closed} closed), {} generators, {} PV units, {} shunts, base {} MVA",
        network.display(),
        net.n_bus(),
        net.branches().len(),
        net.generators().len(),
        net.pv_units().len(),
        net.shunts().len(),
        net.s_base()
    );
    if let Some(d) = demand {
        let series = load_demand(d, dt)?;
        series
            .check_against(&net)
            .with_context(|| format!("checking {} against {}", d.display(), network.display()))?;
        for u in net.pv_units() {
            if u.p_profile.len() < series.horizon() {
                bail!(
                    "PV unit at bus {} has {} hours of output but demand spans {}",
                    u.bus,
                    u.p_profile.len(),
                    series.horizon()
                );
            }
        }
        println!(
            "{}: {} hours ({} valid), peak {:.3} MW",
            d.display(),
            series.horizon(),
            series.valid_hours(),
            (0..series.horizon())
                .filter(|t| series.is_valid(*t))
                .map(|t| series.total_p(t))
                .fold(0.0, f64::max)
        );
    }
    println!("ok");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Solve {
            common,
            stress,
            case,
            caps,
            cap_mvar,
            out,
            sensitivity,
        } => cmd_solve(&common, &stress, &case, &caps, cap_mvar, out, sensitivity),
        Cmd::Study { common, study, out } => cmd_study(&common, &study, out),
        Cmd::Plan {
            case3,
            cap_cost,
            voll,
            candidates,
            out,
        } => cmd_plan(&case3, &cap_cost, voll, &candidates, &out),
        Cmd::Report { dir } => cmd_report(&dir),
        Cmd::Validate {
            network,
            demand,
            dt,
        } => cmd_validate(&network, demand.as_deref(), dt),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let version: &'static str = Box::leak(version_string().into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    info!("gridcap {version}");
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
