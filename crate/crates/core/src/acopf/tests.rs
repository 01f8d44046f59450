use super::*;
use crate::grid::parse_network;

const LOSSY: &str = "\
BASE_MVA 10
BUS
1 slack 0.9 1.1 12.47
2 pq 0.9 1.1 12.47
BRANCH
1 2 0.02 0.1 0 closed
GEN
1 0 10 -5 5 0.5 10 5
";

fn problem(net: &Network, p2: f64, q2: f64, objective: Objective) -> OpfProblem<'_> {
    OpfProblem::new(net, vec![0.0, p2], vec![0.0, q2], objective)
}

/// Minimum slack output over a fine scan of V2. For fixed V2 the bus-2
/// balance is linear in (V1 cos t, V1 sin t), so every scan point is an
/// exact power-flow solution.
fn lossy_oracle(p2: f64, q2: f64) -> (f64, f64, f64) {
    let (r, x) = (0.02, 0.1);
    let d = r * r + x * x;
    let (g, b) = (r / d, -x / d);
    let (pd, qd) = (p2 / 10.0, q2 / 10.0);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=20_000 {
        let v2 = 0.9 + i as f64 * 1e-5;
        // P2 = v2^2 g - v2 (g a + b c) = -pd, Q2 = -v2^2 b - v2 (g c - b a) = -qd
        let rp = (-pd - v2 * v2 * g) / -v2;
        let rq = (-qd + v2 * v2 * b) / -v2;
        // g a + b c = rp ; -b a + g c = rq
        let det = g * g + b * b;
        let a = (g * rp - b * rq) / det;
        let c = (b * rp + g * rq) / det;
        let v1 = a.hypot(c);
        if !(0.9..=1.1).contains(&v1) {
            continue;
        }
        let th2 = c.atan2(a);
        let (ct, st) = (th2.cos(), (-th2).sin());
        let p1 = v1 * v1 * g - v1 * v2 * (g * ct + b * st);
        let q1 = -v1 * v1 * b - v1 * v2 * (g * st - b * ct);
        if q1 * 10.0 < -5.0 || q1 * 10.0 > 5.0 {
            continue;
        }
        if p1 < best.0 {
            best = (p1, v1, v2);
        }
    }
    (best.0 * 10.0, best.1, best.2)
}

#[test]
fn objective_cost_arithmetic() {
    let net = crate::grid::tests::two_bus(0.1);
    let pb = problem(&net, 1.0, 0.0, Objective::Economic);
    assert_eq!(objective_cost(&[2.0], &[0.0, 0.0], &pb), 25.0);
    assert_eq!(objective_cost(&[0.0], &[0.0, 0.0], &pb), 5.0);
    let old = problem(&net, 1.0, 0.0, Objective::OptimalLoadDelivery);
    assert_eq!(objective_cost(&[0.0], &[0.0, 1.0], &old), 1005.0);
}

#[test]
fn flat_no_flow_has_zero_residual() {
    let net = crate::grid::tests::two_bus(0.1);
    let pb = problem(&net, 0.0, 0.0, Objective::Economic);
    let st = OpfState {
        v: vec![1.0, 1.0],
        theta: vec![0.0, 0.0],
        p_g: vec![0.0],
        q_g: vec![0.0],
        shed: vec![0.0, 0.0],
    };
    for (dp, dq) in residuals(&st, &pb).unwrap() {
        assert_eq!((dp, dq), (0.0, 0.0));
    }
    let bad = OpfState { v: vec![1.0], ..st };
    assert!(matches!(residuals(&bad, &pb), Err(Error::Dimension(_))));
}

#[test]
fn residual_moves_with_voltage_like_the_jacobian() {
    let net = parse_network(LOSSY).unwrap();
    let pb = problem(&net, 4.0, 1.0, Objective::Economic);
    let sol = solve(&pb, None).unwrap();
    assert!(sol.max_mismatch() <= 1e-10, "{}", sol.max_mismatch());
    let mut st = sol.state();
    st.v[0] += 0.01;
    let dq = residuals(&st, &pb).unwrap()[0].1;
    // dQ1/dV1 = -2 V1 B11 - V2 (G12 sin t12 - B12 cos t12); the residual is its negative
    let d = 0.02f64.powi(2) + 0.1f64.powi(2);
    let (g, b) = (0.02 / d, -0.1 / d);
    let t12 = sol.theta[0] - sol.theta[1];
    let dq_dv1 = -2.0 * sol.v[0] * b + sol.v[1] * (-g * t12.sin() + b * t12.cos());
    assert!(dq.signum() == (-dq_dv1).signum(), "{dq} vs {dq_dv1}");
    assert!((dq + dq_dv1 * 0.01).abs() < 0.01 * dq.abs().max(1e-3) + 1e-3);
}

#[test]
fn lossy_two_bus_matches_scan() {
    let net = parse_network(LOSSY).unwrap();
    let pb = problem(&net, 4.0, 1.0, Objective::Economic);
    let sol = solve(&pb, None).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert_eq!(sol.theta[0], 0.0);
    let (p1, v1, v2) = lossy_oracle(4.0, 1.0);
    assert!((sol.p_g[0] - p1).abs() < 1e-4, "{} vs {p1}", sol.p_g[0]);
    assert!((sol.v[0] - v1).abs() < 1e-3 && (sol.v[1] - v2).abs() < 1e-3);
    assert!((sol.p_g[0] - 4.0 - sol.losses_mw).abs() < 1e-6);
    let cost = objective_cost(&sol.p_g, &sol.shed, &pb);
    assert!((sol.objective_value - cost).abs() < 1e-12);

    let rep = kkt_report(&sol, &pb).unwrap();
    assert!(rep.stationarity <= 1e-6 && rep.feasibility <= 1e-6 && rep.complementarity <= 1e-6);
    assert!(rep.negative_multipliers.is_empty());
}

#[test]
fn corrupted_voltage_multiplier_is_flagged() {
    let net = parse_network(LOSSY).unwrap();
    let pb = problem(&net, 4.0, 1.0, Objective::Economic);
    let mut sol = solve(&pb, None).unwrap();
    let k = (0..2)
        .max_by(|a, b| sol.mu_vmax[*a].total_cmp(&sol.mu_vmax[*b]))
        .unwrap();
    assert!(sol.mu_vmax[k] > 1e-3, "expected a binding upper voltage bound");
    sol.mu_vmax[k] = -sol.mu_vmax[k];
    let rep = kkt_report(&sol, &pb).unwrap();
    assert_eq!(rep.negative_multipliers.len(), 1);
    assert!(rep.negative_multipliers[0].contains("mu_vmax"));
    assert!(!rep.passes(&pb.solver));
}

#[test]
fn fixed_voltages_cannot_feed_reactive_load() {
    // With |V| = 1 at both ends, a lossless line absorbs 10 (1 - cos t) p.u. of
    // reactive power at each end, so bus 2 can never receive the 1 Mvar it needs.
    let net = crate::grid::tests::two_bus(0.1)
        .with_voltage_limits(|_| (1.0, 1.0))
        .unwrap();
    let best = (0..=200_000)
        .map(|i| -1.5 + i as f64 * 1.5e-5)
        .map(|t: f64| {
            let dp = -0.4 + 10.0 * t.sin();
            let dq = -0.1 - 10.0 * (1.0 - t.cos());
            dp.abs().max(dq.abs())
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best > 0.09);
    let pb = problem(&net, 4.0, 1.0, Objective::Economic);
    let sol = solve(&pb, None).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    let rep = kkt_report(&sol, &pb).unwrap();
    assert!(rep.feasibility > 1e-4);
}

#[test]
fn zero_demand_dispatch() {
    let net = crate::grid::tests::two_bus(0.1);
    let pb = problem(&net, 0.0, 0.0, Objective::Economic);
    let sol = solve(&pb, None).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.p_g[0].abs() < 1e-6);
    assert!((sol.objective_value - 5.0).abs() < 1e-5);
}

#[test]
fn load_delivery_matches_economic_when_feasible() {
    let net = parse_network(LOSSY).unwrap();
    let eco = solve(&problem(&net, 4.0, 1.0, Objective::Economic), None).unwrap();
    let old = solve(&problem(&net, 4.0, 1.0, Objective::OptimalLoadDelivery), None).unwrap();
    assert_eq!(old.status, SolveStatus::Optimal);
    assert!(old.shed.iter().all(|s| *s < 1e-7), "{:?}", old.shed);
    let rel = (old.objective_value - eco.objective_value).abs() / eco.objective_value;
    assert!(rel < 1e-6, "{rel}");
}

#[test]
fn load_delivery_sheds_when_generation_runs_out() {
    let net = parse_network(LOSSY).unwrap();
    let pb = problem(&net, 12.0, 1.0, Objective::OptimalLoadDelivery);
    let sol = solve(&pb, None).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.shed[1] > 0.1);
    assert!((sol.p_g[0] - 10.0).abs() < 1e-4);
    let eco = solve(&problem(&net, 12.0, 1.0, Objective::Economic), None).unwrap();
    assert_ne!(eco.status, SolveStatus::Optimal);
}

#[test]
fn warm_start_reaches_same_optimum() {
    let net = parse_network(LOSSY).unwrap();
    let a = solve(&problem(&net, 4.0, 1.0, Objective::Economic), None).unwrap();
    let pb = problem(&net, 4.5, 1.2, Objective::Economic);
    let cold = solve(&pb, None).unwrap();
    let warm = solve(&pb, Some(&a)).unwrap();
    assert_eq!(warm.status, SolveStatus::Optimal);
    let rel = (warm.objective_value - cold.objective_value).abs() / cold.objective_value;
    assert!(rel < 1e-6);
    let again = solve(&pb, Some(&a)).unwrap();
    assert_eq!(again.objective_value.to_bits(), warm.objective_value.to_bits());
}

#[test]
fn rejects_bad_dimensions_and_options() {
    let net = parse_network(LOSSY).unwrap();
    let mut pb = problem(&net, 4.0, 1.0, Objective::Economic);
    pb.p_d.push(1.0);
    assert!(matches!(solve(&pb, None), Err(Error::Dimension(_))));
    let mut pb = problem(&net, 4.0, 1.0, Objective::Economic);
    pb.solver.max_iter = 0;
    assert!(matches!(solve(&pb, None), Err(Error::InvalidOption(_))));
}

#[test]
fn max_iterations_still_reports() {
    let net = parse_network(LOSSY).unwrap();
    let mut pb = problem(&net, 4.0, 1.0, Objective::Economic);
    pb.solver.max_iter = 2;
    let sol = solve(&pb, None).unwrap();
    assert_eq!(sol.status, SolveStatus::MaxIterations);
    let rep = kkt_report(&sol, &pb).unwrap();
    assert!(rep.stationarity.is_finite());
}
