mod common;

use gridcap_core::grid::{parse_network, serialize_network};
use gridcap_core::study::{hour_problem, run_case, CaseId, HourStatus, Scenario};
use gridcap_core::{kkt_report, SolverOptions};

#[test]
fn bundled_networks_parse_and_round_trip() {
    for (name, net, demand) in common::fixtures() {
        let back = parse_network(&serialize_network(&net)).unwrap();
        assert_eq!(back, net, "{name}");
        demand.check_against(&net).unwrap();
    }
}

#[test]
fn microgrid_has_one_excluded_hour_and_a_dead_bus() {
    let net = common::network("microgrid9");
    let d = common::demand("microgrid9");
    assert_eq!((d.horizon(), d.valid_hours()), (48, 47));
    let dead: Vec<_> = net
        .bus_ids()
        .into_iter()
        .zip(net.energized())
        .filter(|(_, e)| !**e)
        .map(|(b, _)| b)
        .collect();
    assert_eq!(dead, vec![100]);
    let peak = (0..48).filter(|t| d.is_valid(*t)).map(|t| d.total_p(t)).fold(0.0, f64::max);
    assert!((3.5..=4.5).contains(&peak), "{peak}");
}

#[test]
fn economic_runs_are_optimal_with_clean_kkt_points() {
    let opts = SolverOptions::default();
    for (name, net, demand) in common::fixtures() {
        let scenario = Scenario::new(CaseId::Economic);
        let case = run_case(&scenario, &net, &demand).unwrap();
        for h in &case.hours {
            if h.status == HourStatus::Excluded {
                continue;
            }
            assert!(h.status.is_optimal(), "{name} hour {}", h.hour);
            let sol = h.solution.as_ref().unwrap();
            assert!(sol.max_mismatch() <= 1e-6, "{name} hour {}", h.hour);
            let pb = hour_problem(&scenario, &net, &demand, h.hour).unwrap();
            let rep = kkt_report(sol, &pb).unwrap();
            assert!(rep.passes(&opts), "{name} hour {}: {rep:?}", h.hour);
            assert!(rep.min_multiplier >= -1e-9);
            assert!(rep.complementarity <= 1e-6);
        }
    }
}

#[test]
fn finite_difference_converges_as_eps_halves() {
    use gridcap_core::sensitivity::{fd_oracle, FdQuantity};
    let net = common::network("five_bus");
    let demand = common::demand("five_bus");
    let pb = hour_problem(&Scenario::new(CaseId::Economic), &net, &demand, 2).unwrap();
    let eps = 1e-3 * net.s_base();
    let a = fd_oracle(&pb, 5, FdQuantity::Qd, eps).unwrap().value().unwrap();
    let b = fd_oracle(&pb, 5, FdQuantity::Qd, eps / 2.0).unwrap().value().unwrap();
    assert!((a - b).abs() / b.abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn cost_scaling_scales_sensitivities_and_keeps_ranks() {
    use gridcap_core::sensitivity::{composite_score, extract, ScoreWeights};
    use gridcap_core::solve;
    let net = common::network("microgrid9");
    let demand = common::demand("microgrid9");
    let s = Scenario::new(CaseId::Economic);
    for alpha in [0.5, 3.0] {
        let scaled = net.with_cost_scale(alpha).unwrap();
        for hour in [4, 12, 19] {
            let base = solve(&hour_problem(&s, &net, &demand, hour).unwrap(), None).unwrap();
            let other = solve(&hour_problem(&s, &scaled, &demand, hour).unwrap(), None).unwrap();
            let (ra, rb) = (extract(&base, &net).unwrap(), extract(&other, &scaled).unwrap());
            // nonbinding bounds leave multipliers of complementarity-tolerance size
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-4 * y.abs() + 1e-3;
            for (a, b) in ra.iter().zip(&rb) {
                assert!(close(b.os_q, alpha * a.os_q), "bus {} hour {hour}: {} vs {}", a.bus_id, b.os_q, alpha * a.os_q);
                assert!(close(b.os_v, alpha * a.os_v), "bus {} hour {hour}: {} vs {}", a.bus_id, b.os_v, alpha * a.os_v);
            }
            let w = ScoreWeights::default();
            let order = |r: &[gridcap_core::sensitivity::SensitivityRecord]| {
                composite_score(r, w).unwrap().iter().map(|r| r.bus_id).collect::<Vec<_>>()
            };
            assert_eq!(order(&ra), order(&rb), "alpha {alpha} hour {hour}");
        }
    }
}
