//! AC-OPF as an [`Nlp`]: polar voltages, generator set-points and optional
//! per-bus shed fractions over the energized buses.

use nalgebra::{DMatrix, DVector};

use super::ipm::Nlp;
use super::{Objective, OpfProblem, OpfSolution};
use crate::error::{Error, Result};
use crate::grid::build_admittance;

/// Bus power injections and their first derivatives at a polar voltage point.
pub(crate) struct Flows {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub dp_dth: DMatrix<f64>,
    pub dp_dv: DMatrix<f64>,
    pub dq_dth: DMatrix<f64>,
    pub dq_dv: DMatrix<f64>,
}

impl Flows {
    pub fn new(g: &DMatrix<f64>, b: &DMatrix<f64>, v: &[f64], th: &[f64]) -> Self {
        let n = v.len();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut dp_dth = DMatrix::zeros(n, n);
        let mut dp_dv = DMatrix::zeros(n, n);
        let mut dq_dth = DMatrix::zeros(n, n);
        let mut dq_dv = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (gij, bij) = (g[(i, j)], b[(i, j)]);
                if gij == 0.0 && bij == 0.0 {
                    continue;
                }
                let (s, c) = (th[i] - th[j]).sin_cos();
                let re = gij * c + bij * s;
                let im = gij * s - bij * c;
                p[i] += v[i] * v[j] * re;
                q[i] += v[i] * v[j] * im;
                if i != j {
                    dp_dth[(i, j)] = v[i] * v[j] * im;
                    dq_dth[(i, j)] = -v[i] * v[j] * re;
                    dp_dv[(i, j)] = v[i] * re;
                    dq_dv[(i, j)] = v[i] * im;
                }
            }
        }
        for i in 0..n {
            dp_dth[(i, i)] = -q[i] - b[(i, i)] * v[i] * v[i];
            dq_dth[(i, i)] = p[i] - g[(i, i)] * v[i] * v[i];
            dp_dv[(i, i)] = p[i] / v[i] + g[(i, i)] * v[i];
            dq_dv[(i, i)] = q[i] / v[i] - b[(i, i)] * v[i];
        }
        Flows {
            p,
            q,
            dp_dth,
            dp_dv,
            dq_dth,
            dq_dv,
        }
    }
}

/// Hessian of `sum_i a_i P_i + b_i Q_i` with respect to `[theta; V]`.
pub(crate) fn weighted_flow_hessian(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &[f64],
    th: &[f64],
    a: &[f64],
    bw: &[f64],
) -> DMatrix<f64> {
    let n = v.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        if a[i] == 0.0 && bw[i] == 0.0 {
            continue;
        }
        h[(n + i, n + i)] += 2.0 * (a[i] * g[(i, i)] - bw[i] * b[(i, i)]);
        for j in 0..n {
            let (gij, bij) = (g[(i, j)], b[(i, j)]);
            if i == j || (gij == 0.0 && bij == 0.0) {
                continue;
            }
            let (s, c) = (th[i] - th[j]).sin_cos();
            let val = a[i] * (gij * c + bij * s) + bw[i] * (gij * s - bij * c);
            let der = a[i] * (-gij * s + bij * c) + bw[i] * (gij * c + bij * s);
            let vv = v[i] * v[j];
            let (ti, tj, vi, vj) = (i, j, n + i, n + j);
            h[(ti, ti)] -= vv * val;
            h[(tj, tj)] -= vv * val;
            h[(ti, tj)] += vv * val;
            h[(tj, ti)] += vv * val;
            h[(ti, vi)] += v[j] * der;
            h[(vi, ti)] += v[j] * der;
            h[(ti, vj)] += v[i] * der;
            h[(vj, ti)] += v[i] * der;
            h[(tj, vi)] -= v[j] * der;
            h[(vi, tj)] -= v[j] * der;
            h[(tj, vj)] -= v[i] * der;
            h[(vj, tj)] -= v[i] * der;
            h[(vi, vj)] += val;
            h[(vj, vi)] += val;
        }
    }
    h
}

pub(crate) struct OpfModel {
    /// Network bus index of each energized position.
    pub buses: Vec<usize>,
    pub nb: usize,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub s_base: f64,
    /// Per energized position, p.u.
    pub pd: Vec<f64>,
    pub qd: Vec<f64>,
    pub pinj: Vec<f64>,
    pub qinj: Vec<f64>,
    pub gen_pos: Vec<usize>,
    pub gen_cost: Vec<[f64; 3]>,
    pub th_idx: Vec<Option<usize>>,
    pub v_off: usize,
    pub pg_off: usize,
    pub qg_off: usize,
    pub s_idx: Vec<Option<usize>>,
    pub n: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// $ per p.u. of total generation.
    pub w_pg: f64,
    /// $ per p.u. of losses.
    pub w_loss: f64,
    /// $ per unit shed fraction, per position.
    pub shed_weight: Vec<f64>,
    pub f_scale: f64,
}

impl OpfModel {
    pub fn new(pb: &OpfProblem<'_>) -> Result<Self> {
        let net = pb.network;
        let nb = net.n_bus();
        for (name, v) in [
            ("p_d", &pb.p_d),
            ("q_d", &pb.q_d),
            ("p_inj", &pb.p_inj),
            ("q_inj", &pb.q_inj),
        ] {
            if v.len() != nb {
                return Err(Error::Dimension(format!(
                    "{name} has {} entries for {nb} buses",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDemand(format!("{name} has non-finite entries")));
            }
        }
        pb.options.validate()?;
        pb.solver.validate()?;

        let energized = net.energized();
        let buses: Vec<usize> = (0..nb).filter(|&i| energized[i]).collect();
        for i in (0..nb).filter(|&i| !energized[i]) {
            if pb.p_d[i] != 0.0 || pb.q_d[i] != 0.0 || pb.p_inj[i] != 0.0 || pb.q_inj[i] != 0.0 {
                return Err(Error::MultiIsland(format!(
                    "demand at de-energized bus {}",
                    net.buses()[i].id
                )));
            }
        }
        let ne = buses.len();
        let mut pos = vec![usize::MAX; nb];
        for (k, &i) in buses.iter().enumerate() {
            pos[i] = k;
        }
        let y = build_admittance(net);
        let g = DMatrix::from_fn(ne, ne, |r, c| y.g(buses[r], buses[c]));
        let b = DMatrix::from_fn(ne, ne, |r, c| y.b(buses[r], buses[c]));
        let sb = net.s_base();
        let slack_pos = pos[net.slack_index()];

        let mut th_idx = vec![None; ne];
        let mut n = 0;
        for (k, t) in th_idx.iter_mut().enumerate() {
            if k != slack_pos {
                *t = Some(n);
                n += 1;
            }
        }
        let v_off = n;
        n += ne;
        let ng = net.generators().len();
        let pg_off = n;
        n += ng;
        let qg_off = n;
        n += ng;
        let pick = |v: &Vec<f64>| -> Vec<f64> { buses.iter().map(|&i| v[i] / sb).collect() };
        let pd = pick(&pb.p_d);
        let qd = pick(&pb.q_d);
        let mut s_idx = vec![None; ne];
        if pb.objective == Objective::OptimalLoadDelivery {
            for k in 0..ne {
                if pd[k] > 0.0 {
                    s_idx[k] = Some(n);
                    n += 1;
                }
            }
        }

        let mut lower = vec![f64::NEG_INFINITY; n];
        let mut upper = vec![f64::INFINITY; n];
        for (k, &i) in buses.iter().enumerate() {
            let bus = &net.buses()[i];
            lower[v_off + k] = bus.v_min;
            upper[v_off + k] = bus.v_max;
        }
        for (gi, gen) in net.generators().iter().enumerate() {
            lower[pg_off + gi] = gen.p_min / sb;
            upper[pg_off + gi] = gen.p_max / sb;
            lower[qg_off + gi] = gen.q_min / sb;
            upper[qg_off + gi] = gen.q_max / sb;
        }
        for s in s_idx.iter().flatten() {
            lower[*s] = 0.0;
            upper[*s] = 1.0;
        }

        let gens = net.generators();
        let marginal_max: Vec<f64> = gens.iter().map(|g| g.cost.marginal(g.p_max)).collect();
        let cost_scale = marginal_max.iter().sum::<f64>() / gens.len().max(1) as f64;
        let f_scale = marginal_max.iter().fold(0.0f64, |a, m| a.max(sb * m));
        let f_scale = if f_scale > 0.0 { f_scale } else { 1.0 };

        let shed_weight = if pb.objective == Objective::OptimalLoadDelivery {
            pd.iter()
                .map(|p| pb.options.voll_rate * pb.options.dt * p * sb)
                .collect()
        } else {
            vec![0.0; ne]
        };

        Ok(OpfModel {
            gen_pos: gens.iter().map(|g| pos[net.bus_index(g.bus).unwrap()]).collect(),
            gen_cost: gens.iter().map(|g| [g.cost.c2, g.cost.c1, g.cost.c0]).collect(),
            pinj: pick(&pb.p_inj),
            qinj: pick(&pb.q_inj),
            buses,
            nb,
            g,
            b,
            s_base: sb,
            pd,
            qd,
            th_idx,
            v_off,
            pg_off,
            qg_off,
            s_idx,
            n,
            lower,
            upper,
            w_pg: pb.options.eps_pg * cost_scale * sb,
            w_loss: pb.options.eps_loss * cost_scale * sb,
            shed_weight,
            f_scale,
        })
    }

    pub fn ne(&self) -> usize {
        self.buses.len()
    }

    pub fn ng(&self) -> usize {
        self.gen_pos.len()
    }

    pub fn unpack<'x>(&self, x: &'x [f64]) -> (Vec<f64>, &'x [f64]) {
        let th = self
            .th_idx
            .iter()
            .map(|t| t.map_or(0.0, |j| x[j]))
            .collect();
        (th, &x[self.v_off..self.v_off + self.ne()])
    }

    pub fn shed(&self, x: &[f64], k: usize) -> f64 {
        self.s_idx[k].map_or(0.0, |j| x[j])
    }

    pub fn generation_cost(&self, x: &[f64]) -> f64 {
        let sb = self.s_base;
        (0..self.ng())
            .map(|g| {
                let p = x[self.pg_off + g] * sb;
                let [c2, c1, c0] = self.gen_cost[g];
                (c2 * p + c1) * p + c0
            })
            .sum()
    }

    pub fn shed_penalty(&self, x: &[f64]) -> f64 {
        (0..self.ne())
            .map(|k| self.shed_weight[k] * self.shed(x, k))
            .sum()
    }

    /// Flat start: unit voltages, zero angles, mid-range generation, no shedding.
    pub fn flat_start(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for k in 0..self.ne() {
            x[self.v_off + k] = 1.0;
        }
        for j in self.pg_off..self.qg_off + self.ng() {
            x[j] = 0.5 * (self.lower[j] + self.upper[j]);
        }
        x
    }

    pub fn pack_solution(&self, sol: &OpfSolution) -> Result<Vec<f64>> {
        if sol.v.len() != self.nb
            || sol.theta.len() != self.nb
            || sol.p_g.len() != self.ng()
            || sol.q_g.len() != self.ng()
        {
            return Err(Error::Dimension("warm start does not match network".into()));
        }
        let mut x = self.flat_start();
        for (k, &i) in self.buses.iter().enumerate() {
            if let Some(j) = self.th_idx[k] {
                x[j] = sol.theta[i];
            }
            x[self.v_off + k] = sol.v[i];
            if let Some(j) = self.s_idx[k] {
                x[j] = sol.shed.get(i).copied().unwrap_or(0.0);
            }
        }
        for gi in 0..self.ng() {
            x[self.pg_off + gi] = sol.p_g[gi] / self.s_base;
            x[self.qg_off + gi] = sol.q_g[gi] / self.s_base;
        }
        Ok(x)
    }

    pub fn flows(&self, x: &[f64]) -> Flows {
        let (th, v) = self.unpack(x);
        Flows::new(&self.g, &self.b, v, &th)
    }

    /// Solver objective in $: generation cost plus tie-breakers plus shed penalty.
    pub fn full_objective(&self, x: &[f64], flows: &Flows) -> f64 {
        let pg_sum: f64 = (0..self.ng()).map(|g| x[self.pg_off + g]).sum();
        let losses: f64 = flows.p.iter().sum();
        self.generation_cost(x) + self.w_pg * pg_sum + self.w_loss * losses + self.shed_penalty(x)
    }
}

impl Nlp for OpfModel {
    fn n(&self) -> usize {
        self.n
    }

    fn n_eq(&self) -> usize {
        2 * self.ne()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let sb = self.s_base;
        let ne = self.ne();
        let mut grad = DVector::zeros(self.n);
        for g in 0..self.ng() {
            let [c2, c1, _] = self.gen_cost[g];
            let p = x[self.pg_off + g] * sb;
            grad[self.pg_off + g] = sb * (2.0 * c2 * p + c1) + self.w_pg;
        }
        if self.w_loss != 0.0 {
            let fl = self.flows(x);
            for k in 0..ne {
                let dth: f64 = (0..ne).map(|i| fl.dp_dth[(i, k)]).sum();
                let dv: f64 = (0..ne).map(|i| fl.dp_dv[(i, k)]).sum();
                if let Some(j) = self.th_idx[k] {
                    grad[j] += self.w_loss * dth;
                }
                grad[self.v_off + k] += self.w_loss * dv;
            }
        }
        for k in 0..ne {
            if let Some(j) = self.s_idx[k] {
                grad[j] += self.shed_weight[k];
            }
        }
        grad
    }

    fn constraints(&self, x: &[f64]) -> DVector<f64> {
        let ne = self.ne();
        let fl = self.flows(x);
        let mut g = DVector::zeros(2 * ne);
        for k in 0..ne {
            let keep = 1.0 - self.shed(x, k);
            g[k] = -self.pd[k] * keep + self.pinj[k] - fl.p[k];
            g[ne + k] = -self.qd[k] * keep + self.qinj[k] - fl.q[k];
        }
        for (gi, &k) in self.gen_pos.iter().enumerate() {
            g[k] += x[self.pg_off + gi];
            g[ne + k] += x[self.qg_off + gi];
        }
        g
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let ne = self.ne();
        let fl = self.flows(x);
        let mut j = DMatrix::zeros(2 * ne, self.n);
        for k in 0..ne {
            for m in 0..ne {
                if let Some(c) = self.th_idx[m] {
                    j[(k, c)] = -fl.dp_dth[(k, m)];
                    j[(ne + k, c)] = -fl.dq_dth[(k, m)];
                }
                j[(k, self.v_off + m)] = -fl.dp_dv[(k, m)];
                j[(ne + k, self.v_off + m)] = -fl.dq_dv[(k, m)];
            }
            if let Some(c) = self.s_idx[k] {
                j[(k, c)] = self.pd[k];
                j[(ne + k, c)] = self.qd[k];
            }
        }
        for (gi, &k) in self.gen_pos.iter().enumerate() {
            j[(k, self.pg_off + gi)] = 1.0;
            j[(ne + k, self.qg_off + gi)] = 1.0;
        }
        j
    }

    fn hessian(&self, x: &[f64], obj_factor: f64, lambda: &[f64]) -> DMatrix<f64> {
        let ne = self.ne();
        let sb = self.s_base;
        let mut h = DMatrix::zeros(self.n, self.n);
        for g in 0..self.ng() {
            let j = self.pg_off + g;
            h[(j, j)] = obj_factor * 2.0 * self.gen_cost[g][0] * sb * sb;
        }
        let a: Vec<f64> = (0..ne)
            .map(|k| obj_factor * self.w_loss - lambda[k])
            .collect();
        let bw: Vec<f64> = (0..ne).map(|k| -lambda[ne + k]).collect();
        let (th, v) = self.unpack(x);
        let hf = weighted_flow_hessian(&self.g, &self.b, v, &th, &a, &bw);
        let var = |p: usize| -> Option<usize> {
            if p < ne {
                self.th_idx[p]
            } else {
                Some(self.v_off + p - ne)
            }
        };
        for r in 0..2 * ne {
            let Some(vr) = var(r) else { continue };
            for c in 0..2 * ne {
                let Some(vc) = var(c) else { continue };
                h[(vr, vc)] += hf[(r, c)];
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bus() -> (DMatrix<f64>, DMatrix<f64>) {
        // arbitrary symmetric admittance with losses and charging
        let y = [
            [(3.0, -9.0), (-1.5, 4.0), (-1.5, 5.2)],
            [(-1.5, 4.0), (2.7, -7.9), (-1.2, 4.0)],
            [(-1.5, 5.2), (-1.2, 4.0), (2.7, -9.1)],
        ];
        (
            DMatrix::from_fn(3, 3, |i, j| y[i][j].0),
            DMatrix::from_fn(3, 3, |i, j| y[i][j].1),
        )
    }

    fn flows_vec(g: &DMatrix<f64>, b: &DMatrix<f64>, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let f = Flows::new(g, b, &z[3..], &z[..3]);
        (f.p, f.q)
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (g, b) = three_bus();
        let z = [0.0, -0.05, 0.08, 1.02, 0.97, 1.01];
        let f = Flows::new(&g, &b, &z[3..], &z[..3]);
        let h = 1e-6;
        for c in 0..6 {
            let mut zp = z;
            let mut zm = z;
            zp[c] += h;
            zm[c] -= h;
            let (pp, qp) = flows_vec(&g, &b, &zp);
            let (pm, qm) = flows_vec(&g, &b, &zm);
            for i in 0..3 {
                let dp = (pp[i] - pm[i]) / (2.0 * h);
                let dq = (qp[i] - qm[i]) / (2.0 * h);
                let (ap, aq) = if c < 3 {
                    (f.dp_dth[(i, c)], f.dq_dth[(i, c)])
                } else {
                    (f.dp_dv[(i, c - 3)], f.dq_dv[(i, c - 3)])
                };
                assert!((dp - ap).abs() < 1e-6, "dP{i}/dz{c}: {dp} vs {ap}");
                assert!((dq - aq).abs() < 1e-6, "dQ{i}/dz{c}: {dq} vs {aq}");
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let (g, b) = three_bus();
        let z = [0.01, -0.05, 0.08, 1.02, 0.97, 1.01];
        let a = [0.3, -1.2, 0.7];
        let bw = [-0.4, 0.9, 1.5];
        let grad = |z: &[f64]| -> Vec<f64> {
            let f = Flows::new(&g, &b, &z[3..], &z[..3]);
            (0..6)
                .map(|c| {
                    (0..3)
                        .map(|i| {
                            let (dp, dq) = if c < 3 {
                                (f.dp_dth[(i, c)], f.dq_dth[(i, c)])
                            } else {
                                (f.dp_dv[(i, c - 3)], f.dq_dv[(i, c - 3)])
                            };
                            a[i] * dp + bw[i] * dq
                        })
                        .sum()
                })
                .collect()
        };
        let hs = weighted_flow_hessian(&g, &b, &z[3..], &z[..3], &a, &bw);
        let h = 1e-6;
        for c in 0..6 {
            let mut zp = z;
            let mut zm = z;
            zp[c] += h;
            zm[c] -= h;
            let (gp, gm) = (grad(&zp), grad(&zm));
            for r in 0..6 {
                let fd = (gp[r] - gm[r]) / (2.0 * h);
                assert!((fd - hs[(r, c)]).abs() < 1e-5, "H[{r},{c}]: {fd} vs {}", hs[(r, c)]);
            }
        }
    }
}
