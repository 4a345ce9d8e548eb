//! Operator-splitting QP solver.
//!
//! The problem is rewritten as `min ½xᵀHx + gᵀx  s.t.  l ≤ Cx ≤ u` with
//! `C = [A_eq; A_in; I_box]` and solved by ADMM on the splitting `z = Cx`:
//! a reduced KKT system with a cached Cholesky factor, over-relaxation,
//! projection of `z` onto the bounds, and a dual ascent step. The data are
//! equilibrated first, the step size `ρ` adapts to the residual balance, and
//! consecutive dual (primal) iterate differences are checked for
//! certificates of primal (dual) infeasibility. Once the residuals are small
//! the active set is guessed from `(z, y)` and the equality-constrained KKT
//! system is solved directly, which usually drives the residuals to rounding
//! level.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::qp::{kkt_residuals, QpProblem, QpSolution, SolveStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Absolute and relative residual tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial ADMM step size.
    pub rho: f64,
    /// Proximal regularization of the `x` update.
    pub sigma: f64,
    /// Over-relaxation parameter in (0, 2).
    pub relaxation: f64,
    /// Equilibration passes (0 disables scaling).
    pub scaling_iterations: usize,
    /// Iterations between residual checks.
    pub check_interval: usize,
    /// Iterations between step-size adaptations (multiple of `check_interval`).
    pub adaptive_rho_interval: usize,
    /// Tolerance of the infeasibility certificates.
    pub infeasibility_tolerance: f64,
    /// Solve the guessed active-set KKT system after convergence.
    pub polish: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 20_000,
            rho: 0.1,
            sigma: 1e-6,
            relaxation: 1.6,
            scaling_iterations: 10,
            check_interval: 10,
            adaptive_rho_interval: 50,
            infeasibility_tolerance: 1e-5,
            polish: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 || self.check_interval == 0 {
            return Err(Error::invalid("solver iteration counts must be positive"));
        }
        if !(self.rho > 0.0 && self.sigma > 0.0) {
            return Err(Error::invalid("rho and sigma must be positive"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::invalid("relaxation must lie in (0, 2)"));
        }
        Ok(())
    }
}

/// Starting point for a solve. Dual blocks whose length does not match the
/// problem are ignored (treated as zero).
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub x: DVector<f64>,
    pub y_eq: DVector<f64>,
    pub y_in: DVector<f64>,
    pub y_box: DVector<f64>,
}

impl WarmStart {
    pub fn primal(x: DVector<f64>) -> Self {
        Self { x, y_eq: DVector::zeros(0), y_in: DVector::zeros(0), y_box: DVector::zeros(0) }
    }
}

impl From<&QpSolution> for WarmStart {
    fn from(s: &QpSolution) -> Self {
        Self { x: s.x.clone(), y_eq: s.y_eq.clone(), y_in: s.y_in.clone(), y_box: s.y_box.clone() }
    }
}

const MIN_SCALING: f64 = 1e-4;
const MAX_SCALING: f64 = 1e4;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_EQ_FACTOR: f64 = 1e3;
const POLISH_RETRY: usize = 100;

fn limit_scale(v: f64) -> f64 {
    if v < MIN_SCALING {
        1.0
    } else {
        v.min(MAX_SCALING)
    }
}

/// The stacked constraint system `l ≤ C x ≤ u`.
struct Stacked {
    c: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    m_eq: usize,
    m_in: usize,
    /// Variables with at least one finite box bound, in row order.
    box_idx: Vec<usize>,
}

impl Stacked {
    fn new(p: &QpProblem) -> Self {
        let n = p.num_vars();
        let box_idx: Vec<usize> = (0..n).filter(|&j| p.lower[j].is_finite() || p.upper[j].is_finite()).collect();
        let (m_eq, m_in) = (p.a_eq.nrows(), p.a_in.nrows());
        let m = m_eq + m_in + box_idx.len();
        let mut c = DMatrix::zeros(m, n);
        let mut l = DVector::zeros(m);
        let mut u = DVector::zeros(m);
        c.rows_mut(0, m_eq).copy_from(&p.a_eq);
        l.rows_mut(0, m_eq).copy_from(&p.b_eq);
        u.rows_mut(0, m_eq).copy_from(&p.b_eq);
        c.rows_mut(m_eq, m_in).copy_from(&p.a_in);
        l.rows_mut(m_eq, m_in).copy_from(&p.ineq_lower);
        u.rows_mut(m_eq, m_in).copy_from(&p.ineq_upper);
        for (r, &j) in box_idx.iter().enumerate() {
            let i = m_eq + m_in + r;
            c[(i, j)] = 1.0;
            l[i] = p.lower[j];
            u[i] = p.upper[j];
        }
        Self { c, l, u, m_eq, m_in, box_idx }
    }

    fn m(&self) -> usize {
        self.c.nrows()
    }

    /// Splits a stacked dual vector into the problem's blocks.
    fn split(&self, y: &DVector<f64>, n: usize) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let y_eq = y.rows(0, self.m_eq).into_owned();
        let y_in = y.rows(self.m_eq, self.m_in).into_owned();
        let mut y_box = DVector::zeros(n);
        for (r, &j) in self.box_idx.iter().enumerate() {
            y_box[j] = y[self.m_eq + self.m_in + r];
        }
        (y_eq, y_in, y_box)
    }

    fn stack(&self, w: &WarmStart, n: usize) -> DVector<f64> {
        let mut y = DVector::zeros(self.m());
        if w.y_eq.len() == self.m_eq {
            y.rows_mut(0, self.m_eq).copy_from(&w.y_eq);
        }
        if w.y_in.len() == self.m_in {
            y.rows_mut(self.m_eq, self.m_in).copy_from(&w.y_in);
        }
        if w.y_box.len() == n {
            for (r, &j) in self.box_idx.iter().enumerate() {
                y[self.m_eq + self.m_in + r] = w.y_box[j];
            }
        }
        y
    }
}

/// Scaled data `P̄ = c D H D`, `q̄ = c D g`, `C̄ = E C D`, `l̄ = E l`, `ū = E u`.
struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    c: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    d: DVector<f64>,
    e: DVector<f64>,
    cost: f64,
}

fn col_amax(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).amax()
}

fn equilibrate(h: &DMatrix<f64>, g: &DVector<f64>, st: &Stacked, passes: usize) -> Scaled {
    let n = g.len();
    let m = st.m();
    let mut p = h.clone();
    let mut q = g.clone();
    let mut c = st.c.clone();
    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);
    let mut cost = 1.0;
    for _ in 0..passes {
        let dj: Vec<f64> = (0..n)
            .map(|j| {
                let v = col_amax(&p, j).max(if m > 0 { col_amax(&c, j) } else { 0.0 });
                1.0 / limit_scale(v).sqrt()
            })
            .collect();
        let ei: Vec<f64> = (0..m).map(|i| 1.0 / limit_scale(c.row(i).amax()).sqrt()).collect();
        for j in 0..n {
            for i in 0..n {
                p[(i, j)] *= dj[i] * dj[j];
            }
            q[j] *= dj[j];
            d[j] *= dj[j];
            for i in 0..m {
                c[(i, j)] *= ei[i] * dj[j];
            }
        }
        for i in 0..m {
            e[i] *= ei[i];
        }
        let mean_col = if n > 0 { (0..n).map(|j| col_amax(&p, j)).sum::<f64>() / n as f64 } else { 0.0 };
        let gamma = 1.0 / limit_scale(mean_col.max(q.amax()));
        p *= gamma;
        q *= gamma;
        cost *= gamma;
    }
    let l = st.l.component_mul(&e);
    let u = st.u.component_mul(&e);
    Scaled { p, q, c, l, u, d, e, cost }
}

fn rho_vector(s: &Scaled, rho: f64) -> DVector<f64> {
    DVector::from_iterator(
        s.l.len(),
        s.l.iter().zip(s.u.iter()).map(|(&l, &u)| {
            if l == u {
                RHO_EQ_FACTOR * rho
            } else if l.is_infinite() && u.is_infinite() {
                RHO_MIN
            } else {
                rho
            }
        }),
    )
}

fn factor(s: &Scaled, rho: &DVector<f64>, sigma: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = s.q.len();
    let mut rc = s.c.clone();
    for (i, &r) in rho.iter().enumerate() {
        rc.row_mut(i).scale_mut(r.sqrt());
    }
    let mut k = rc.tr_mul(&rc);
    k += &s.p;
    for j in 0..n {
        k[(j, j)] += sigma;
    }
    Cholesky::new(k).ok_or_else(|| Error::domain("QP cost matrix is not positive semidefinite"))
}

/// Residual norms in unscaled units.
struct Residuals {
    prim: f64,
    dual: f64,
    eps_prim: f64,
    eps_dual: f64,
    prim_scale: f64,
    dual_scale: f64,
}

fn residuals(s: &Scaled, x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>, tol: f64) -> Residuals {
    let cx = &s.c * x;
    let px = &s.p * x;
    let cty = s.c.tr_mul(y);
    let unscale_rows = |v: &DVector<f64>| v.iter().zip(s.e.iter()).fold(0.0f64, |m, (a, e)| m.max((a / e).abs()));
    let unscale_cols =
        |v: &DVector<f64>| v.iter().zip(s.d.iter()).fold(0.0f64, |m, (a, d)| m.max((a / d).abs())) / s.cost;
    let prim = unscale_rows(&(&cx - z));
    let dual = unscale_cols(&(&px + &s.q + &cty));
    let prim_scale = unscale_rows(&cx).max(unscale_rows(z));
    let dual_scale = unscale_cols(&px).max(unscale_cols(&cty)).max(unscale_cols(&s.q));
    Residuals { prim, dual, eps_prim: tol + tol * prim_scale, eps_dual: tol + tol * dual_scale, prim_scale, dual_scale }
}

fn primal_infeasible(s: &Scaled, dy: &DVector<f64>, eps: f64) -> bool {
    let norm = dy.iter().zip(s.e.iter()).fold(0.0f64, |m, (a, e)| m.max((a * e).abs()));
    if norm < 1e-12 {
        return false;
    }
    let ctdy = s.c.tr_mul(dy);
    let stat = ctdy.iter().zip(s.d.iter()).fold(0.0f64, |m, (a, d)| m.max((a / d).abs()));
    if stat > eps * norm {
        return false;
    }
    let mut support = 0.0;
    for i in 0..dy.len() {
        let v = dy[i];
        let vu = (v * s.e[i]).abs();
        if v > 0.0 {
            if s.u[i].is_finite() {
                support += s.u[i] * v;
            } else if vu > eps * norm {
                return false;
            }
        } else if v < 0.0 {
            if s.l[i].is_finite() {
                support += s.l[i] * v;
            } else if vu > eps * norm {
                return false;
            }
        }
    }
    support < -eps * norm
}

fn dual_infeasible(s: &Scaled, dx: &DVector<f64>, eps: f64) -> bool {
    let norm = dx.iter().zip(s.d.iter()).fold(0.0f64, |m, (a, d)| m.max((a * d).abs()));
    if norm < 1e-12 {
        return false;
    }
    let pdx = &s.p * dx;
    let curv = pdx.iter().zip(s.d.iter()).fold(0.0f64, |m, (a, d)| m.max((a / d).abs())) / s.cost;
    if curv > eps * norm {
        return false;
    }
    if s.q.dot(dx) / s.cost >= -eps * norm {
        return false;
    }
    let cdx = &s.c * dx;
    (0..cdx.len()).all(|i| {
        let v = cdx[i] / s.e[i];
        (!s.u[i].is_finite() || v <= eps * norm) && (!s.l[i].is_finite() || v >= -eps * norm)
    })
}

/// Solves the equality-constrained KKT system of the guessed active set.
fn polish(
    problem: &QpProblem,
    st: &Stacked,
    z: &DVector<f64>,
    y: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = problem.num_vars();
    let mut active: Vec<(usize, f64)> = Vec::new();
    for i in 0..st.m() {
        let (l, u) = (st.l[i], st.u[i]);
        // equality rows are always active
        if l == u || (l.is_finite() && z[i] - l < -y[i]) {
            active.push((i, l));
        } else if u.is_finite() && u - z[i] < y[i] {
            active.push((i, u));
        }
    }
    let na = active.len();
    let k = n + na;
    let mut kkt = DMatrix::zeros(k, k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&problem.h);
    let mut rhs = DVector::zeros(k);
    rhs.rows_mut(0, n).copy_from(&(-&problem.g));
    for (r, &(i, b)) in active.iter().enumerate() {
        let row = st.c.row(i);
        kkt.view_mut((n + r, 0), (1, n)).copy_from(&row);
        kkt.view_mut((0, n + r), (n, 1)).copy_from(&row.transpose());
        rhs[n + r] = b;
    }
    let delta = 1e-9 * kkt.amax().max(1.0);
    let mut reg = kkt.clone();
    for j in 0..n {
        reg[(j, j)] += delta;
    }
    for j in n..k {
        reg[(j, j)] -= delta;
    }
    let lu = reg.lu();
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..10 {
        let r = &rhs - &kkt * &sol;
        if r.amax() < 1e-14 * rhs.amax().max(1.0) {
            break;
        }
        sol += lu.solve(&r)?;
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let x = sol.rows(0, n).into_owned();
    let mut y_full = DVector::zeros(st.m());
    for (r, &(i, _)) in active.iter().enumerate() {
        y_full[i] = sol[n + r];
    }
    Some((x, y_full))
}

fn package(
    problem: &QpProblem,
    st: &Stacked,
    x: DVector<f64>,
    y: &DVector<f64>,
    status: SolveStatus,
    iterations: usize,
    polished: bool,
) -> QpSolution {
    let n = problem.num_vars();
    let (y_eq, y_in, y_box) = st.split(y, n);
    let objective = problem.objective(&x);
    let mut sol = QpSolution {
        x,
        y_eq,
        y_in,
        y_box,
        objective,
        primal_residual: 0.0,
        dual_residual: 0.0,
        iterations,
        status,
        polished,
    };
    let kkt = kkt_residuals(problem, &sol);
    sol.primal_residual = kkt.primal;
    sol.dual_residual = kkt.stationarity.max(kkt.dual_sign).max(kkt.complementarity);
    sol
}

/// Solves `problem`; never fails on infeasible or unbounded data (those are
/// reported through the status), only on malformed input.
pub fn solve_qp(problem: &QpProblem, settings: &SolverSettings, warm: Option<&WarmStart>) -> Result<QpSolution> {
    problem.validate()?;
    settings.validate()?;
    let n = problem.num_vars();
    let st = Stacked::new(problem);
    let m = st.m();
    let s = equilibrate(&problem.h, &problem.g, &st, settings.scaling_iterations);
    let tol = settings.tolerance;
    let alpha = settings.relaxation;

    let mut rho_scalar = settings.rho;
    let mut rho = rho_vector(&s, rho_scalar);
    let mut chol = factor(&s, &rho, settings.sigma)?;

    // scaled iterates
    let (mut x, mut y) = match warm {
        Some(w) if w.x.len() == n => {
            let xs = w.x.component_div(&s.d);
            let ys = st.stack(w, n).component_div(&s.e) * s.cost;
            (xs, ys)
        }
        _ => (DVector::zeros(n), DVector::zeros(m)),
    };
    let mut z = (&s.c * &x).zip_zip_map(&s.l, &s.u, |v, l, u| v.clamp(l, u));

    let unscaled = |x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>| {
        (x.component_mul(&s.d), z.component_div(&s.e), y.component_mul(&s.e) / s.cost)
    };

    let mut next_polish = 0usize;
    let mut rhs = DVector::zeros(n);
    for iter in 1..=settings.max_iterations {
        // x̃ from the reduced KKT system
        rhs.copy_from(&(&x * settings.sigma - &s.q));
        let w = rho.component_mul(&z) - &y;
        rhs.gemv_tr(1.0, &s.c, &w, 1.0);
        let x_tilde = chol.solve(&rhs);
        let z_tilde = &s.c * &x_tilde;

        let x_new = &x_tilde * alpha + &x * (1.0 - alpha);
        let z_relax = &z_tilde * alpha + &z * (1.0 - alpha);
        let mut z_new = DVector::zeros(m);
        for i in 0..m {
            z_new[i] = (z_relax[i] + y[i] / rho[i]).clamp(s.l[i], s.u[i]);
        }
        let y_new = &y + rho.component_mul(&(&z_relax - &z_new));
        let dy = &y_new - &y;
        let dx = &x_new - &x;
        x = x_new;
        z = z_new;
        y = y_new;

        if iter % settings.check_interval != 0 && iter != settings.max_iterations {
            continue;
        }
        let r = residuals(&s, &x, &z, &y, tol);
        if r.prim <= r.eps_prim && r.dual <= r.eps_dual {
            let (xu, zu, yu) = unscaled(&x, &z, &y);
            if settings.polish && iter >= next_polish {
                next_polish = iter + POLISH_RETRY;
                if let Some((xp, yp)) = polish(problem, &st, &zu, &yu) {
                    let cand = package(problem, &st, xp, &yp, SolveStatus::Optimal, iter, true);
                    if cand.primal_residual <= tol && cand.dual_residual <= tol {
                        log::trace!("qp polished after {iter} iterations");
                        return Ok(cand);
                    }
                }
            }
            let cand = package(problem, &st, xu, &yu, SolveStatus::Optimal, iter, false);
            if cand.primal_residual <= tol && cand.dual_residual <= tol {
                return Ok(cand);
            }
        }
        if primal_infeasible(&s, &dy, settings.infeasibility_tolerance) {
            let (xu, _, _) = unscaled(&x, &z, &y);
            let cert = dy.component_mul(&s.e);
            return Ok(package(problem, &st, xu, &cert, SolveStatus::Infeasible, iter, false));
        }
        if dual_infeasible(&s, &dx, settings.infeasibility_tolerance) {
            let (xu, _, yu) = unscaled(&x, &z, &y);
            return Ok(package(problem, &st, xu, &yu, SolveStatus::Unbounded, iter, false));
        }
        if settings.adaptive_rho_interval > 0 && iter % settings.adaptive_rho_interval == 0 {
            let pn = r.prim / r.prim_scale.max(1e-30);
            let dn = r.dual / r.dual_scale.max(1e-30);
            if pn > 0.0 && dn > 0.0 {
                let ratio = (pn / dn).sqrt();
                if !(0.2..=5.0).contains(&ratio) {
                    let new_rho = (rho_scalar * ratio).clamp(RHO_MIN, RHO_MAX);
                    if new_rho != rho_scalar {
                        rho_scalar = new_rho;
                        rho = rho_vector(&s, rho_scalar);
                        chol = factor(&s, &rho, settings.sigma)?;
                    }
                }
            }
        }
    }
    let (xu, zu, yu) = unscaled(&x, &z, &y);
    if settings.polish {
        if let Some((xp, yp)) = polish(problem, &st, &zu, &yu) {
            let cand = package(problem, &st, xp, &yp, SolveStatus::Optimal, settings.max_iterations, true);
            if cand.primal_residual <= tol && cand.dual_residual <= tol {
                return Ok(cand);
            }
        }
    }
    Ok(package(problem, &st, xu, &yu, SolveStatus::MaxIterations, settings.max_iterations, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpc::qp::kkt_residuals;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn symmetric_projection() {
        let p = QpProblem::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2))
            .with_equality(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![2.0]));
        let s = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-6 && (s.x[1] - 1.0).abs() < 1e-6);
        assert!(kkt_residuals(&p, &s).max() <= 1e-6);
    }

    #[test]
    fn active_box_bound() {
        // min (x − 3)² s.t. 0 ≤ x ≤ 1 → x = 1, y_box = 4
        let p = QpProblem::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, -6.0))
            .with_bounds(DVector::from_element(1, 0.0), DVector::from_element(1, 1.0));
        let s = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-8);
        assert!((s.y_box[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasibility() {
        // x1 + x2 = 3 with 0 ≤ x ≤ 1
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equality(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![3.0]))
            .with_bounds(DVector::zeros(2), DVector::from_element(2, 1.0));
        let s = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let p = QpProblem::new(DMatrix::zeros(1, 1), DVector::from_element(1, 1.0));
        let s = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn two_sided_inequality() {
        // min ½‖x − (2, −2)‖² s.t. −1 ≤ x1 − x2 ≤ 1
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::from_vec(vec![-2.0, 2.0])).with_inequality(
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
        );
        let s = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-8 && (s.x[1] + 0.5).abs() < 1e-8);
        assert!(kkt_residuals(&p, &s).max() <= 1e-6);
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let n = 6;
        let h = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
        let g = DVector::from_fn(n, |i, _| (i as f64 - 2.5) * 0.7);
        let p = QpProblem::new(h, g)
            .with_equality(DMatrix::from_element(1, n, 1.0), DVector::from_element(1, 1.0))
            .with_bounds(DVector::from_element(n, 0.0), DVector::from_element(n, 0.4));
        let cold = solve_qp(&p, &settings(), None).unwrap();
        let warm = solve_qp(&p, &settings(), Some(&WarmStart::from(&cold))).unwrap();
        assert_eq!(cold.status, SolveStatus::Optimal);
        assert_eq!(warm.status, SolveStatus::Optimal);
        assert!((cold.objective - warm.objective).abs() <= 10.0 * 1e-6);
        assert!(warm.iterations <= cold.iterations);
    }

    #[test]
    fn deterministic() {
        let p = QpProblem::new(DMatrix::identity(3, 3), DVector::from_vec(vec![1.0, -1.0, 0.5]))
            .with_bounds(DVector::from_element(3, -0.2), DVector::from_element(3, 0.2));
        let a = solve_qp(&p, &settings(), None).unwrap();
        let b = solve_qp(&p, &settings(), None).unwrap();
        assert_eq!(a, b);
    }
}
