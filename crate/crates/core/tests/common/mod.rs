#![allow(dead_code)]

use std::path::PathBuf;

use gridcap_core::grid::{parse_demand, parse_network};
use gridcap_core::study::PfOverride;
use gridcap_core::{DemandSeries, Network, PfSign};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn network(name: &str) -> Network {
    let path = data_dir().join(format!("{name}.net"));
    parse_network(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub fn demand(name: &str) -> DemandSeries {
    let path = data_dir().join(format!("{name}_demand.csv"));
    parse_demand(&std::fs::read_to_string(&path).unwrap(), 1.0).unwrap()
}

/// (name, network, demand) for every bundled fixture.
pub fn fixtures() -> Vec<(&'static str, Network, DemandSeries)> {
    ["two_bus", "five_bus", "microgrid9"]
        .into_iter()
        .map(|n| (n, network(n), demand(n)))
        .collect()
}

pub fn stress() -> PfOverride {
    PfOverride::new(0.8, PfSign::Lagging).unwrap()
}
