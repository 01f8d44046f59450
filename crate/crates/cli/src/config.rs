//! Run configuration: command-line flags over a TOML file over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use gridcap_core::sensitivity::{Aggregation, ScoreWeights};
use gridcap_core::study::{PfOverride, StudyConfig};
use gridcap_core::{ObjectiveOptions, PfSign, SolverOptions};

/// Keys accepted in a `--config` file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub network: Option<PathBuf>,
    pub demand: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    /// Reserved; the solver is deterministic.
    pub seed: Option<u64>,
    pub feas_tol: Option<f64>,
    pub kkt_tol: Option<f64>,
    pub comp_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub voll_rate: Option<f64>,
    pub eps_pg: Option<f64>,
    pub eps_loss: Option<f64>,
    pub stress_pf: Option<f64>,
    pub stress_sign: Option<String>,
    pub weights: Option<String>,
    pub top_m: Option<usize>,
    pub cap_mvar: Option<f64>,
    pub aggregation: Option<String>,
    pub case4_stressed: Option<bool>,
    pub warm_start: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.network, &mut cfg.demand, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Hours per demand step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub feas_tol: Option<f64>,
    #[arg(long)]
    pub kkt_tol: Option<f64>,
    #[arg(long)]
    pub comp_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Value of lost load, $/MWh.
    #[arg(long = "voll")]
    pub voll_rate: Option<f64>,
    #[arg(long)]
    pub eps_pg: Option<f64>,
    #[arg(long)]
    pub eps_loss: Option<f64>,
    /// Reserved; the solver is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct StressArgs {
    /// PV power factor in the stressed cases.
    #[arg(long)]
    pub stress_pf: Option<f64>,
    /// leading or lagging.
    #[arg(long)]
    pub stress_sign: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub stress: StressArgs,
    /// Score weights as `w_q,w_v`.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub top_m: Option<usize>,
    /// Rated Mvar of each Case 4 capacitor.
    #[arg(long)]
    pub cap_mvar: Option<f64>,
    /// mean or max over hours.
    #[arg(long)]
    pub aggregation: Option<String>,
    /// Rerun Case 4 under the stressed power factors.
    #[arg(long)]
    pub case4_stressed: bool,
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network: PathBuf,
    pub demand: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dt: f64,
    pub seed: u64,
    pub objective: ObjectiveOptions,
    pub solver: SolverOptions,
    pub stress: Option<PfOverride>,
    pub study: StudyConfig,
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if !path.is_file() {
        bail!("{what} file {} does not exist", path.display());
    }
    Ok(path)
}

impl RunConfig {
    pub fn resolve(
        common: &CommonArgs,
        stress: Option<&StressArgs>,
        study: Option<&StudyArgs>,
        out: Option<PathBuf>,
    ) -> Result<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let network = pick(&common.network, &file.network)
            .context("no network file given (--network or config `network`)")?;
        let network = existing(network, "network")?;
        let demand = pick(&common.demand, &file.demand)
            .map(|d| existing(d, "demand"))
            .transpose()?;

        let mut objective = ObjectiveOptions::default();
        let mut solver = SolverOptions::default();
        let dt = pick(&common.dt, &file.dt).unwrap_or(1.0);
        objective.dt = dt;
        if let Some(v) = pick(&common.voll_rate, &file.voll_rate) {
            objective.voll_rate = v;
        }
        if let Some(v) = pick(&common.eps_pg, &file.eps_pg) {
            objective.eps_pg = v;
        }
        if let Some(v) = pick(&common.eps_loss, &file.eps_loss) {
            objective.eps_loss = v;
        }
        if let Some(v) = pick(&common.feas_tol, &file.feas_tol) {
            solver.feas_tol = v;
        }
        if let Some(v) = pick(&common.kkt_tol, &file.kkt_tol) {
            solver.kkt_tol = v;
        }
        if let Some(v) = pick(&common.comp_tol, &file.comp_tol) {
            solver.comp_tol = v;
        }
        if let Some(v) = pick(&common.max_iter, &file.max_iter) {
            solver.max_iter = v;
        }
        objective.validate()?;
        solver.validate()?;

        let stress_args = stress.or(study.map(|s| &s.stress));
        let pf = pick(&stress_args.and_then(|s| s.stress_pf), &file.stress_pf);
        let sign = pick(&stress_args.and_then(|s| s.stress_sign.clone()), &file.stress_sign);
        let stress = match (pf, sign) {
            (None, None) => None,
            (pf, sign) => {
                let sign: PfSign = sign.as_deref().unwrap_or("lagging").parse()?;
                Some(PfOverride::new(pf.unwrap_or(0.8), sign)?)
            }
        };

        let mut sc = StudyConfig::new(stress.unwrap_or(PfOverride::new(0.8, PfSign::Lagging)?));
        sc.options = objective.clone();
        sc.solver = solver.clone();
        if let Some(s) = study {
            if let Some(w) = pick(&s.weights, &file.weights) {
                sc.weights = w.parse::<ScoreWeights>()?;
            }
            if let Some(m) = pick(&s.top_m, &file.top_m) {
                sc.top_m = m;
            }
            if let Some(c) = pick(&s.cap_mvar, &file.cap_mvar) {
                sc.cap_mvar = c;
            }
            if let Some(a) = pick(&s.aggregation, &file.aggregation) {
                sc.aggregation = a.parse::<Aggregation>()?;
            }
            sc.case4_stressed = s.case4_stressed || file.case4_stressed.unwrap_or(false);
            sc.warm_start = !s.no_warm_start && file.warm_start.unwrap_or(true);
            if sc.top_m == 0 {
                bail!("--top-m must be at least 1");
            }
        }
        Ok(RunConfig {
            network,
            demand,
            out: out.or(file.out),
            dt,
            seed: pick(&common.seed, &file.seed).unwrap_or(0),
            objective,
            solver,
            stress,
            study: sc,
        })
    }
}

/// Version line with the solver defaults, for reproducibility records.
pub fn version_string() -> String {
    let s = SolverOptions::default();
    let o = ObjectiveOptions::default();
    format!(
        "{} (feas_tol={:e} kkt_tol={:e} comp_tol={:e} max_iter={} eps_pg={:e} eps_loss={:e} voll_rate={})",
        env!("CARGO_PKG_VERSION"),
        s.feas_tol,
        s.kkt_tol,
        s.comp_tol,
        s.max_iter,
        o.eps_pg,
        o.eps_loss,
        o.voll_rate
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(network: PathBuf) -> CommonArgs {
        CommonArgs {
            config: None,
            network: Some(network),
            demand: None,
            dt: None,
            feas_tol: None,
            kkt_tol: None,
            comp_tol: None,
            max_iter: None,
            voll_rate: None,
            eps_pg: None,
            eps_loss: None,
            seed: None,
        }
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let net = dir.path().join("n.net");
        std::fs::write(&net, "").unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "network = \"n.net\"\nmax_iter = 50\nkkt_tol = 1e-7\ntop_m = 2\n").unwrap();
        let mut args = common(PathBuf::from("/nonexistent"));
        args.network = None;
        args.config = Some(cfg);
        args.max_iter = Some(80);
        let study = StudyArgs {
            stress: StressArgs { stress_pf: None, stress_sign: None },
            weights: Some("1,0".into()),
            top_m: None,
            cap_mvar: None,
            aggregation: None,
            case4_stressed: false,
            no_warm_start: false,
        };
        let rc = RunConfig::resolve(&args, None, Some(&study), None).unwrap();
        assert_eq!(rc.network, net);
        assert_eq!(rc.solver.max_iter, 80);
        assert_eq!(rc.solver.kkt_tol, 1e-7);
        assert_eq!(rc.solver.comp_tol, SolverOptions::default().comp_tol);
        assert_eq!(rc.study.top_m, 2);
        assert_eq!(rc.study.weights.w_q, 1.0);
        assert!(rc.stress.is_none());
    }

    #[test]
    fn unknown_keys_and_missing_paths_fail() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, "tolerance = 1\n").unwrap();
        assert!(FileConfig::load(&cfg).is_err());
        let err = RunConfig::resolve(&common(dir.path().join("missing.net")), None, None, None)
            .unwrap_err();
        assert!(err.to_string().contains("missing.net"));
    }

    #[test]
    fn version_names_the_tolerances() {
        let v = version_string();
        assert!(v.contains("feas_tol=1e-6") && v.contains("max_iter=200"), "{v}");
    }
}
