//! Primal-dual interior-point method for
//!
//! ```text
//!     min  f(x)
//!     s.t. g(x) = 0
//!          l <= x <= u
//! ```
//!
//! Bounds become `h(x) <= 0` with slacks `h(x) + z = 0, z > 0`. Each iteration
//! takes a Newton step on the barrier-perturbed KKT system, with the Hessian
//! block regularized until the KKT matrix has the inertia of a local
//! minimizer, and fraction-to-boundary step lengths. Variables with `l == u`
//! are turned into equality rows. When the main loop gives up, an elastic
//! feasibility-restoration problem is solved with the same machinery.

use log::{debug, trace};
use nalgebra::{DMatrix, DVector};

/// Smooth nonlinear program with equality constraints and simple bounds.
pub(crate) trait Nlp {
    fn n(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    fn constraints(&self, x: &[f64]) -> DVector<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    /// Hessian of `obj_factor * f + lambda' g`.
    fn hessian(&self, x: &[f64], obj_factor: f64, lambda: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub(crate) struct IpmSettings {
    pub feas_tol: f64,
    /// Scaled stationarity tolerance.
    pub grad_tol: f64,
    /// Per-constraint complementarity tolerance, in units of the scaled objective.
    pub comp_tol: f64,
    pub max_iter: usize,
    /// Centering parameter.
    pub sigma: f64,
    /// Fraction-to-boundary factor.
    pub xi: f64,
    /// Objective is multiplied by this before solving.
    pub obj_scale: f64,
    /// Consecutive iterations of violation above `infeasible_tol` without
    /// progress after which restoration declares infeasibility.
    pub stall_iters: usize,
    pub infeasible_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Converged,
    MaxIterations,
    /// Restoration could not reduce the constraint violation below tolerance.
    Infeasible,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub x: Vec<f64>,
    /// Equality multipliers for `g`, in unscaled objective units.
    pub lambda: Vec<f64>,
    /// Lower / upper bound multipliers per variable, unscaled, zero where unbounded.
    pub mu_lower: Vec<f64>,
    pub mu_upper: Vec<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn is_fixed(l: f64, u: f64) -> bool {
    l.is_finite() && u.is_finite() && (u - l).abs() <= 1e-12 * (1.0 + l.abs())
}

/// Bound rows: `(var, +1)` for `x - u <= 0`, `(var, -1)` for `l - x <= 0`.
#[derive(Debug, Clone, Copy)]
struct BoundRow {
    var: usize,
    sign: f64,
    bound: f64,
}

impl BoundRow {
    fn h(&self, x: &[f64]) -> f64 {
        self.sign * (x[self.var] - self.bound)
    }
}

struct Layout {
    rows: Vec<BoundRow>,
    fixed: Vec<(usize, f64)>,
}

impl Layout {
    fn new(lower: &[f64], upper: &[f64]) -> Self {
        let mut rows = Vec::new();
        let mut fixed = Vec::new();
        for (j, (&l, &u)) in lower.iter().zip(upper).enumerate() {
            if is_fixed(l, u) {
                fixed.push((j, l));
                continue;
            }
            if l.is_finite() {
                rows.push(BoundRow {
                    var: j,
                    sign: -1.0,
                    bound: l,
                });
            }
            if u.is_finite() {
                rows.push(BoundRow {
                    var: j,
                    sign: 1.0,
                    bound: u,
                });
            }
        }
        Layout { rows, fixed }
    }
}

/// Moves `x` strictly inside its bounds.
fn push_interior(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    const K1: f64 = 1e-2;
    const K2: f64 = 1e-2;
    for j in 0..x.len() {
        let (l, u) = (lower[j], upper[j]);
        if is_fixed(l, u) {
            x[j] = l;
            continue;
        }
        let width = u - l;
        if l.is_finite() {
            let d = (K1 * l.abs().max(1.0)).min(if width.is_finite() { K2 * width } else { f64::INFINITY });
            x[j] = x[j].max(l + d);
        }
        if u.is_finite() {
            let d = (K1 * u.abs().max(1.0)).min(if width.is_finite() { K2 * width } else { f64::INFINITY });
            x[j] = x[j].min(u - d);
        }
    }
}

/// Symmetric Ruiz scaling `d` such that `diag(d) k diag(d)` has rows of
/// unit infinity norm. Congruence preserves inertia.
fn equilibrate(k: &DMatrix<f64>) -> DVector<f64> {
    let n = k.nrows();
    let mut d = DVector::from_element(n, 1.0);
    for _ in 0..8 {
        let mut done = true;
        for i in 0..n {
            let row = (0..n).fold(0.0f64, |a, j| a.max((d[i] * k[(i, j)] * d[j]).abs()));
            if row > 0.0 {
                if (row - 1.0).abs() > 1e-2 {
                    done = false;
                }
                d[i] /= row.sqrt();
            }
        }
        if done {
            break;
        }
    }
    d
}

/// Counts (positive, negative, near-zero) eigenvalues of an equilibrated matrix.
fn inertia(k: &DMatrix<f64>) -> (usize, usize, usize) {
    let ev = k.clone().symmetric_eigenvalues();
    let mut out = (0, 0, 0);
    for &e in ev.iter() {
        if e > 1e-12 {
            out.0 += 1;
        } else if e < -1e-12 {
            out.1 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

struct Iterate {
    x: Vec<f64>,
    lam: Vec<f64>,
    z: Vec<f64>,
    mu: Vec<f64>,
}

struct Progress {
    iterations: usize,
    converged: bool,
    best: Option<(f64, Iterate)>,
}

pub(crate) fn solve<P: Nlp>(nlp: &P, x0: &[f64], set: &IpmSettings) -> IpmResult {
    let mut x = x0.to_vec();
    push_interior(&mut x, nlp.lower(), nlp.upper());
    let layout = Layout::new(nlp.lower(), nlp.upper());

    let first = run(nlp, &layout, x, set, None);
    if first.converged {
        return finish(nlp, &layout, first, IpmStatus::Converged, set);
    }
    debug!(
        "main phase stopped after {} iterations; entering restoration",
        first.iterations
    );

    let start = first
        .best
        .as_ref()
        .map(|(_, it)| it.x.clone())
        .unwrap_or_else(|| x0.to_vec());
    let (restored, violation, rest_iters) = restore(nlp, &start, set);
    let used = first.iterations + rest_iters;
    if violation > set.infeasible_tol {
        debug!("restoration ended with violation {violation:.3e}: infeasible");
        let n_eq = nlp.n_eq() + layout.fixed.len();
        let it = Iterate {
            lam: vec![0.0; n_eq],
            mu: vec![0.0; layout.rows.len()],
            z: layout.rows.iter().map(|r| -r.h(&restored)).collect(),
            x: restored,
        };
        let mut res = finish(
            nlp,
            &layout,
            Progress {
                iterations: used,
                converged: false,
                best: Some((violation, it)),
            },
            IpmStatus::Infeasible,
            set,
        );
        res.iterations = used;
        return res;
    }

    let mut x = restored;
    push_interior(&mut x, nlp.lower(), nlp.upper());
    let second = run(nlp, &layout, x, set, None);
    let iters = used + second.iterations;
    let status = if second.converged {
        IpmStatus::Converged
    } else {
        IpmStatus::MaxIterations
    };
    // keep whichever attempt got closest to feasibility
    let first_closer = match (&first.best, &second.best) {
        (Some((a, _)), Some((b, _))) => a < b && !second.converged,
        _ => false,
    };
    let pick = if first_closer { first } else { second };
    let mut res = finish(nlp, &layout, pick, status, set);
    res.iterations = iters;
    res
}

fn finish<P: Nlp>(
    nlp: &P,
    layout: &Layout,
    prog: Progress,
    status: IpmStatus,
    set: &IpmSettings,
) -> IpmResult {
    let n = nlp.n();
    let (_, mut it) = prog.best.expect("at least one iterate");
    for &(var, v) in &layout.fixed {
        it.x[var] = v;
    }
    let unscale = 1.0 / set.obj_scale;
    let n_eq = nlp.n_eq();
    let mut mu_lower = vec![0.0; n];
    let mut mu_upper = vec![0.0; n];
    for (row, m) in layout.rows.iter().zip(&it.mu) {
        if row.sign > 0.0 {
            mu_upper[row.var] = m * unscale;
        } else {
            mu_lower[row.var] = m * unscale;
        }
    }
    for (k, &(var, _)) in layout.fixed.iter().enumerate() {
        let nu = it.lam[n_eq + k] * unscale;
        mu_upper[var] = nu.max(0.0);
        mu_lower[var] = (-nu).max(0.0);
    }
    IpmResult {
        x: it.x,
        lambda: it.lam[..n_eq].iter().map(|l| l * unscale).collect(),
        mu_lower,
        mu_upper,
        status,
        iterations: prog.iterations,
    }
}

/// Equality residuals including fixed-variable rows.
fn eq_residual<P: Nlp>(nlp: &P, layout: &Layout, x: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = nlp.constraints(x).iter().copied().collect();
    g.extend(layout.fixed.iter().map(|&(j, v)| x[j] - v));
    g
}

fn eq_jacobian<P: Nlp>(nlp: &P, layout: &Layout, x: &[f64]) -> DMatrix<f64> {
    let jg = nlp.jacobian(x);
    let m = jg.nrows();
    let mut j = DMatrix::zeros(m + layout.fixed.len(), nlp.n());
    j.rows_mut(0, m).copy_from(&jg);
    for (k, &(var, _)) in layout.fixed.iter().enumerate() {
        j[(m + k, var)] = 1.0;
    }
    j
}

fn run<P: Nlp>(
    nlp: &P,
    layout: &Layout,
    x0: Vec<f64>,
    set: &IpmSettings,
    mut monitor: Option<&mut dyn FnMut(usize, &[f64], f64) -> bool>,
) -> Progress {
    let n = nlp.n();
    let n_eq = nlp.n_eq() + layout.fixed.len();
    let ni = layout.rows.len();
    let sf = set.obj_scale;

    let z: Vec<f64> = layout.rows.iter().map(|r| -r.h(&x0)).collect();
    let mut it = Iterate {
        x: x0,
        lam: vec![0.0; n_eq],
        mu: vec![1.0; ni],
        z,
    };
    let mut gamma = if ni > 0 {
        set.sigma * it.z.iter().zip(&it.mu).map(|(a, b)| a * b).sum::<f64>() / ni as f64
    } else {
        0.0
    };
    let mut last_delta = 0.0;
    let mut small_steps = 0;
    let mut prog = Progress {
        iterations: 0,
        converged: false,
        best: None,
    };

    for k in 0..=set.max_iter {
        let x = &it.x;
        let g = eq_residual(nlp, layout, x);
        let jg = eq_jacobian(nlp, layout, x);
        let grad = nlp.gradient(x) * sf;
        let h: Vec<f64> = layout.rows.iter().map(|r| r.h(x)).collect();

        // gradient of the Lagrangian
        let mut lx = grad + jg.transpose() * DVector::from_column_slice(&it.lam);
        for (row, m) in layout.rows.iter().zip(&it.mu) {
            lx[row.var] += row.sign * m;
        }

        let feas = norm_inf(&g).max(h.iter().fold(0.0f64, |a, v| a.max(*v)));
        let mult = norm_inf(&it.lam).max(norm_inf(&it.mu));
        let gradc = norm_inf(lx.as_slice()) / (1.0 + mult);
        let comp = it
            .z
            .iter()
            .zip(&it.mu)
            .fold(0.0f64, |a, (z, m)| a.max(z * m));

        if !feas.is_finite() || !gradc.is_finite() {
            debug!("non-finite iterate at {k}");
            break;
        }
        let keep = match &prog.best {
            None => true,
            Some((bf, _)) => feas < *bf || (feas <= set.feas_tol && *bf <= set.feas_tol),
        };
        if keep {
            prog.best = Some((
                feas,
                Iterate {
                    x: it.x.clone(),
                    lam: it.lam.clone(),
                    z: it.z.clone(),
                    mu: it.mu.clone(),
                },
            ));
        }
        prog.iterations = k;
        trace!("it {k:3} feas {feas:.3e} grad {gradc:.3e} comp {comp:.3e} gamma {gamma:.3e}");

        if let Some(stop) = monitor.as_deref_mut() {
            if stop(k, &it.x, feas) {
                break;
            }
        }
        if feas <= 0.1 * set.feas_tol && gradc <= 0.1 * set.grad_tol && comp <= 0.1 * set.comp_tol
        {
            prog.converged = true;
            break;
        }
        if k == set.max_iter {
            break;
        }

        // Newton system
        let mut w = nlp.hessian(x, sf, &it.lam[..nlp.n_eq()]);
        let mut nvec = lx.clone();
        for (i, row) in layout.rows.iter().enumerate() {
            w[(row.var, row.var)] += it.mu[i] / it.z[i];
            nvec[row.var] += row.sign * (gamma + it.mu[i] * h[i]) / it.z[i];
        }
        let dim = n + n_eq;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&w);
        kkt.view_mut((0, n), (n, n_eq)).copy_from(&jg.transpose());
        kkt.view_mut((n, 0), (n_eq, n)).copy_from(&jg);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-nvec));
        for (i, gi) in g.iter().enumerate() {
            rhs[n + i] = -gi;
        }

        let Some(sol) = regularized_solve(&mut kkt, &rhs, n, n_eq, &mut last_delta) else {
            debug!("KKT regularization failed at {k}");
            break;
        };
        let dx = sol.rows(0, n);
        let dlam = sol.rows(n, n_eq);
        let dz: Vec<f64> = layout
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| -h[i] - it.z[i] - r.sign * dx[r.var])
            .collect();
        let dmu: Vec<f64> = (0..ni)
            .map(|i| -it.mu[i] + (gamma - it.mu[i] * dz[i]) / it.z[i])
            .collect();

        let step = |v: &[f64], dv: &[f64]| {
            v.iter()
                .zip(dv)
                .filter(|(_, d)| **d < 0.0)
                .fold(1.0f64, |a, (v, d)| a.min(-set.xi * v / d))
        };
        let alpha_p = step(&it.z, &dz);
        let alpha_d = step(&it.mu, &dmu);

        for j in 0..n {
            it.x[j] += alpha_p * dx[j];
        }
        for i in 0..ni {
            it.z[i] += alpha_p * dz[i];
            it.mu[i] += alpha_d * dmu[i];
        }
        for i in 0..n_eq {
            it.lam[i] += alpha_d * dlam[i];
        }
        if ni > 0 {
            gamma = set.sigma * it.z.iter().zip(&it.mu).map(|(a, b)| a * b).sum::<f64>()
                / ni as f64;
        }

        if alpha_p < 1e-10 {
            small_steps += 1;
            if small_steps >= 5 {
                debug!("step length collapsed at {k}");
                break;
            }
        } else {
            small_steps = 0;
        }
        if norm_inf(&it.x) > 1e8 {
            debug!("iterate diverged at {k}");
            break;
        }
    }
    prog
}

/// Solves `kkt * sol = rhs`, shifting the Hessian block by `delta * I` (and
/// the constraint block by a tiny negative shift when rank deficient) until
/// the matrix has `n` positive and `m` negative eigenvalues.
fn regularized_solve(
    kkt: &mut DMatrix<f64>,
    rhs: &DVector<f64>,
    n: usize,
    m: usize,
    last_delta: &mut f64,
) -> Option<DVector<f64>> {
    let base = kkt.clone();
    let mut delta = 0.0;
    let mut delta_c = 0.0;
    for attempt in 0..60 {
        if attempt > 0 {
            kkt.copy_from(&base);
            for j in 0..n {
                kkt[(j, j)] += delta;
            }
            for j in n..n + m {
                kkt[(j, j)] -= delta_c;
            }
        }
        let d = equilibrate(kkt);
        let scaled = DMatrix::from_fn(n + m, n + m, |i, j| d[i] * kkt[(i, j)] * d[j]);
        let (pos, neg, zero) = inertia(&scaled);
        if pos == n && neg == m && zero == 0 {
            if attempt > 0 {
                *last_delta = delta;
            }
            let y = scaled.lu().solve(&rhs.component_mul(&d))?;
            let sol = y.component_mul(&d);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol);
            }
        }
        if zero > 0 {
            delta_c = if delta_c == 0.0 { 1e-8 } else { (delta_c * 10.0).min(1e-4) };
        }
        delta = if delta == 0.0 {
            if *last_delta == 0.0 {
                1e-4
            } else {
                (*last_delta / 3.0).max(1e-20)
            }
        } else if *last_delta == 0.0 {
            delta * 100.0
        } else {
            delta * 8.0
        };
        if delta > 1e40 {
            return None;
        }
    }
    None
}

/// Elastic restoration problem:
/// `min rho * sum(p + n) + zeta/2 * |x - x_ref|^2  s.t. g(x) - p + n = 0`.
struct Elastic<'a, P: Nlp> {
    inner: &'a P,
    x_ref: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rho: f64,
    zeta: f64,
}

impl<P: Nlp> Elastic<'_, P> {
    fn nx(&self) -> usize {
        self.inner.n()
    }
}

impl<P: Nlp> Nlp for Elastic<'_, P> {
    fn n(&self) -> usize {
        self.inner.n() + 2 * self.inner.n_eq()
    }
    fn n_eq(&self) -> usize {
        self.inner.n_eq()
    }
    fn lower(&self) -> &[f64] {
        &self.lower
    }
    fn upper(&self) -> &[f64] {
        &self.upper
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let nx = self.nx();
        DVector::from_fn(self.n(), |j, _| {
            if j < nx {
                self.zeta * (x[j] - self.x_ref[j])
            } else {
                self.rho
            }
        })
    }
    fn constraints(&self, x: &[f64]) -> DVector<f64> {
        let nx = self.nx();
        let m = self.n_eq();
        let mut g = self.inner.constraints(&x[..nx]);
        for i in 0..m {
            g[i] += -x[nx + i] + x[nx + m + i];
        }
        g
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let nx = self.nx();
        let m = self.n_eq();
        let mut j = DMatrix::zeros(m, self.n());
        j.view_mut((0, 0), (m, nx)).copy_from(&self.inner.jacobian(&x[..nx]));
        for i in 0..m {
            j[(i, nx + i)] = -1.0;
            j[(i, nx + m + i)] = 1.0;
        }
        j
    }
    fn hessian(&self, x: &[f64], obj_factor: f64, lambda: &[f64]) -> DMatrix<f64> {
        let nx = self.nx();
        let mut h = DMatrix::zeros(self.n(), self.n());
        h.view_mut((0, 0), (nx, nx))
            .copy_from(&self.inner.hessian(&x[..nx], 0.0, lambda));
        for j in 0..nx {
            h[(j, j)] += obj_factor * self.zeta;
        }
        h
    }
}

/// Returns the restored point, its constraint violation and iterations used.
fn restore<P: Nlp>(nlp: &P, x_start: &[f64], set: &IpmSettings) -> (Vec<f64>, f64, usize) {
    let nx = nlp.n();
    let m = nlp.n_eq();
    let mut x_ref = x_start.to_vec();
    push_interior(&mut x_ref, nlp.lower(), nlp.upper());
    let g0 = nlp.constraints(&x_ref);

    let mut lower = nlp.lower().to_vec();
    let mut upper = nlp.upper().to_vec();
    lower.extend(std::iter::repeat_n(0.0, 2 * m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, 2 * m));
    let el = Elastic {
        inner: nlp,
        x_ref: x_ref.clone(),
        lower,
        upper,
        rho: 1.0,
        zeta: 1e-4,
    };
    let mut x0 = x_ref.clone();
    let c = 1e-2;
    x0.extend(g0.iter().map(|gi| gi.max(0.0) + c));
    x0.extend(g0.iter().map(|gi| (-gi).max(0.0) + c));

    let layout = Layout::new(el.lower(), el.upper());
    let rset = IpmSettings {
        obj_scale: 1.0,
        comp_tol: 1e-10,
        grad_tol: 1e-8,
        feas_tol: set.feas_tol,
        ..set.clone()
    };

    let mut stalled = 0usize;
    let mut prev = f64::INFINITY;
    let mut best = (f64::INFINITY, x_ref.clone());
    let mut monitor = |_k: usize, x: &[f64], _feas: f64| -> bool {
        let v = norm_inf(nlp.constraints(&x[..nx]).as_slice());
        if v < best.0 {
            best = (v, x[..nx].to_vec());
        }
        if v > set.infeasible_tol && v > (1.0 - 1e-3) * prev {
            stalled += 1;
        } else {
            stalled = 0;
        }
        prev = v;
        stalled >= set.stall_iters
    };
    let prog = run(&el, &layout, x0, &rset, Some(&mut monitor));
    let (_, final_it) = prog.best.expect("iterate");
    let v_final = norm_inf(nlp.constraints(&final_it.x[..nx]).as_slice());
    if v_final <= best.0 {
        (final_it.x[..nx].to_vec(), v_final, prog.iterations)
    } else {
        (best.1, best.0, prog.iterations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min (x0-2)^2 + (x1-1)^2  s.t. x0 + x1 = 2, 0 <= x0 <= 1.2
    struct Toy {
        lo: Vec<f64>,
        hi: Vec<f64>,
        rhs: f64,
    }

    impl Nlp for Toy {
        fn n(&self) -> usize {
            2
        }
        fn n_eq(&self) -> usize {
            1
        }
        fn lower(&self) -> &[f64] {
            &self.lo
        }
        fn upper(&self) -> &[f64] {
            &self.hi
        }
        fn gradient(&self, x: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)])
        }
        fn constraints(&self, x: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![x[0] + x[1] - self.rhs])
        }
        fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0])
        }
        fn hessian(&self, _x: &[f64], s: f64, _l: &[f64]) -> DMatrix<f64> {
            DMatrix::from_diagonal_element(2, 2, 2.0 * s)
        }
    }

    fn settings() -> IpmSettings {
        IpmSettings {
            feas_tol: 1e-8,
            grad_tol: 1e-8,
            comp_tol: 1e-9,
            max_iter: 100,
            sigma: 0.1,
            xi: 0.99995,
            obj_scale: 1.0,
            stall_iters: 20,
            infeasible_tol: 1e-4,
        }
    }

    #[test]
    fn toy_with_active_bound() {
        let toy = Toy {
            lo: vec![0.0, f64::NEG_INFINITY],
            hi: vec![1.2, f64::INFINITY],
            rhs: 2.0,
        };
        let r = solve(&toy, &[0.5, 0.5], &settings());
        assert_eq!(r.status, IpmStatus::Converged);
        // unconstrained-by-bound optimum would be x0 = 1.5; bound forces 1.2
        assert!((r.x[0] - 1.2).abs() < 1e-7);
        assert!((r.x[1] - 0.8).abs() < 1e-7);
        // stationarity: 2(x0-2) + lam + mu_u = 0, 2(x1-1) + lam = 0
        let lam = r.lambda[0];
        assert!((lam - 0.4).abs() < 1e-6);
        assert!((r.mu_upper[0] - 1.2).abs() < 1e-6);
        assert!(r.mu_lower[0].abs() < 1e-6);
    }

    #[test]
    fn fixed_variable_becomes_equality() {
        let toy = Toy {
            lo: vec![0.3, f64::NEG_INFINITY],
            hi: vec![0.3, f64::INFINITY],
            rhs: 2.0,
        };
        let r = solve(&toy, &[0.0, 0.0], &settings());
        assert_eq!(r.status, IpmStatus::Converged);
        assert_eq!(r.x[0], 0.3);
        assert!((r.x[1] - 1.7).abs() < 1e-8);
        // lam = -2(x1-1) = -1.4; mu_u - mu_l = -(2(x0-2) + lam) = 3.4 + 1.4
        assert!((r.mu_upper[0] - 4.8).abs() < 1e-6);
        assert_eq!(r.mu_lower[0], 0.0);
    }

    #[test]
    fn infeasible_box_is_detected() {
        let toy = Toy {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            rhs: 3.0,
        };
        let r = solve(&toy, &[0.5, 0.5], &settings());
        assert_eq!(r.status, IpmStatus::Infeasible);
        // minimal violation point sits at the corner
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3);
    }
}
