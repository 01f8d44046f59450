use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};
use gridcap_core::acopf::solve;
use gridcap_core::grid::{parse_demand, parse_network};
use gridcap_core::study::{hour_problem, run_case, CaseId, PfOverride, Scenario};
use gridcap_core::{DemandSeries, Network, PfSign};

fn load(name: &str) -> (Network, DemandSeries) {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let net = std::fs::read_to_string(dir.join(format!("{name}.net"))).unwrap();
    let dem = std::fs::read_to_string(dir.join(format!("{name}_demand.csv"))).unwrap();
    (parse_network(&net).unwrap(), parse_demand(&dem, 1.0).unwrap())
}

fn single_hour(c: &mut Criterion) {
    let (net, demand) = load("microgrid9");
    let econ = Scenario::new(CaseId::Economic);
    let p = hour_problem(&econ, &net, &demand, 12).unwrap();
    c.bench_function("microgrid9 hour 12 economic", |b| b.iter(|| solve(&p, None).unwrap()));

    let stress = PfOverride::new(0.8, PfSign::Lagging).unwrap();
    let old = Scenario::new(CaseId::Old).with_uniform_pf(stress, net.pv_units().len());
    let p = hour_problem(&old, &net, &demand, 12).unwrap();
    c.bench_function("microgrid9 hour 12 load delivery", |b| b.iter(|| solve(&p, None).unwrap()));
}

fn horizon(c: &mut Criterion) {
    let (net, demand) = load("microgrid9");
    let mut g = c.benchmark_group("horizon");
    g.sample_size(10);
    for warm in [true, false] {
        let s = Scenario { warm_start: warm, ..Scenario::new(CaseId::Economic) };
        let name = if warm { "microgrid9 economic warm" } else { "microgrid9 economic cold" };
        g.bench_function(name, |b| b.iter(|| run_case(&s, &net, &demand).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, single_hour, horizon);
criterion_main!(benches);
