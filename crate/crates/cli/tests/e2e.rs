use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn gridcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridcap"))
        .args(args)
        .output()
        .expect("gridcap runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn study(net: &str, demand: &str, out: &Path, extra: &[&str]) -> Output {
    let (n, d) = (data(net), data(demand));
    let mut args = vec!["study", "--network", s(&n), "--demand", s(&d), "--out", s(out)];
    args.extend_from_slice(extra);
    gridcap(&args)
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (n, d) = (data("microgrid9.net"), data("microgrid9_demand.csv"));
    let out = dir.path().join("h.csv");

    let o = gridcap(&["solve", "--network", s(&n), "--demand", s(&d), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows, 48);

    let o = gridcap(&[
        "solve", "--network", s(&n), "--demand", s(&d), "--out", s(&out), "--stress-pf", "0.8",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let body = std::fs::read_to_string(&out).unwrap();
    let status = |name: &str| body.lines().filter(|l| l.split(',').nth(1) == Some(name)).count();
    assert_eq!(status("optimal") + status("infeasible") + status("excluded"), 48);
    assert!(status("infeasible") > 0);

    let missing = dir.path().join("nope.csv");
    let o = gridcap(&["solve", "--network", s(&n), "--demand", s(&missing), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn study_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = study("five_bus.net", "five_bus_demand.csv", out, &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let cross = std::fs::read_to_string(a.join("cross_case.csv")).unwrap();
    assert_eq!(cross.lines().count(), 5);
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 17);
    for name in names {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn top_m_zero_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = study("five_bus.net", "five_bus_demand.csv", dir.path(), &["--top-m", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("top-m"), "{}", stderr(&o));
}

#[test]
fn config_file_feeds_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "network = {:?}\ndemand = {:?}\nout = \"res\"\ntop_m = 2\n",
            s(&data("five_bus.net")),
            s(&data("five_bus_demand.csv"))
        ),
    )
    .unwrap();
    let o = gridcap(&["study", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = std::fs::read_to_string(dir.path().join("res/study.toml")).unwrap();
    assert!(meta.contains("top_m = 2"), "{meta}");

    std::fs::write(&cfg, "tolerance = 3\n").unwrap();
    let o = gridcap(&["study", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_and_plan_on_a_shedding_study() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let o = study("microgrid9.net", "microgrid9_demand.csv", &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = gridcap(&["report", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("per MW of recovered demand"), "{}", stdout(&o));
    assert!(out.join("summary.txt").is_file() && out.join("ranking_long.csv").is_file());

    let plan = dir.path().join("plan.csv");
    let o = gridcap(&[
        "plan", "--case3", s(&out), "--cap-cost", "*=300", "--voll", "1000", "--out", s(&plan),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body = std::fs::read_to_string(&plan).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("bus_id,c_cap,c_voll,install,s_score"));
    // install exactly where lost-load cost beats the capacitor
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (cap, voll): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert_eq!(f[3] == "1", voll - cap > 1e-9, "{line}");
    }

    std::fs::remove_file(out.join("case2_ranking.csv")).unwrap();
    let o = gridcap(&["report", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("case2_ranking.csv"), "{}", stderr(&o));
}

#[test]
fn validate_and_version() {
    let o = gridcap(&[
        "validate",
        "--network",
        s(&data("microgrid9.net")),
        "--demand",
        s(&data("microgrid9_demand.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("47 valid"), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.net");
    std::fs::write(&bad, "this is not a network\n").unwrap();
    let o = gridcap(&["validate", "--network", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.net"));

    let o = gridcap(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout(&o);
    assert!(v.contains("kkt_tol=") && v.contains("max_iter="), "{v}");
}
