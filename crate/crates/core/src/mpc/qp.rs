use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense convex QP
///
/// ```text
/// minimize    ½ xᵀ H x + gᵀ x + constant
/// subject to  A_eq x = b_eq
///             ineq_lower ≤ A_in x ≤ ineq_upper
///             lower ≤ x ≤ upper
/// ```
///
/// Infinite bounds are allowed on the inequality and box rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub constant: f64,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub ineq_lower: DVector<f64>,
    pub ineq_upper: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem in `n` variables with the given cost.
    pub fn new(h: DMatrix<f64>, g: DVector<f64>) -> Self {
        let n = g.len();
        Self {
            h,
            g,
            constant: 0.0,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            ineq_lower: DVector::zeros(0),
            ineq_upper: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn with_equality(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_inequality(mut self, a: DMatrix<f64>, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.a_in = a;
        self.ineq_lower = lower;
        self.ineq_upper = upper;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x) + self.constant
    }

    /// Checks shapes, finiteness and symmetry of `H`.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let dims_ok = self.h.shape() == (n, n)
            && self.a_eq.ncols() == n
            && self.a_eq.nrows() == self.b_eq.len()
            && self.a_in.ncols() == n
            && self.a_in.nrows() == self.ineq_lower.len()
            && self.a_in.nrows() == self.ineq_upper.len()
            && self.lower.len() == n
            && self.upper.len() == n;
        if !dims_ok {
            return Err(Error::Dimension("QP constraint dimensions are inconsistent".into()));
        }
        let finite =
            self.h.iter().chain(self.g.iter()).chain(self.a_eq.iter()).chain(self.b_eq.iter()).chain(self.a_in.iter());
        if finite.into_iter().any(|v| !v.is_finite()) || !self.constant.is_finite() {
            return Err(Error::NonFinite("QP data"));
        }
        let scale = self.h.amax().max(1.0);
        if (&self.h - self.h.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("QP cost matrix is not symmetric"));
        }
        let bad_bounds = self
            .ineq_lower
            .iter()
            .zip(self.ineq_upper.iter())
            .chain(self.lower.iter().zip(self.upper.iter()))
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u);
        if bad_bounds {
            return Err(Error::invalid("QP has a lower bound above its upper bound"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    Unbounded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max-iter",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver output.
///
/// Duals follow `H x + g + A_eqᵀ y_eq + A_inᵀ y_in + y_box = 0`, with a
/// non-negative multiplier on an active upper bound and a non-positive one on
/// an active lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub y_eq: DVector<f64>,
    pub y_in: DVector<f64>,
    pub y_box: DVector<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Whether the final point came from the active-set refinement.
    pub polished: bool,
}

/// Worst-case violations of the optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual_sign: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual_sign).max(self.complementarity)
    }
}

fn row_violation(value: f64, lo: f64, hi: f64) -> f64 {
    (lo - value).max(value - hi).max(0.0)
}

/// Complementarity and sign violation of one two-sided row.
fn row_dual(value: f64, lo: f64, hi: f64, y: f64) -> (f64, f64) {
    if y > 0.0 {
        let slack = if hi.is_finite() { (hi - value).abs() } else { f64::INFINITY };
        (if slack.is_finite() { y * slack } else { y }, if hi.is_finite() { 0.0 } else { y })
    } else if y < 0.0 {
        let slack = if lo.is_finite() { (value - lo).abs() } else { f64::INFINITY };
        (if slack.is_finite() { -y * slack } else { -y }, if lo.is_finite() { 0.0 } else { -y })
    } else {
        (0.0, 0.0)
    }
}

/// Recomputes the KKT residuals of `(x, y)` from the problem data alone.
pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> KktResiduals {
    let x = &solution.x;
    let grad = &problem.h * x
        + &problem.g
        + problem.a_eq.transpose() * &solution.y_eq
        + problem.a_in.transpose() * &solution.y_in
        + &solution.y_box;
    let mut out = KktResiduals { stationarity: grad.amax(), ..Default::default() };

    let eq = &problem.a_eq * x - &problem.b_eq;
    out.primal = eq.amax();
    let ax = &problem.a_in * x;
    let rows = (0..ax.len())
        .map(|i| (ax[i], problem.ineq_lower[i], problem.ineq_upper[i], solution.y_in[i]))
        .chain((0..x.len()).map(|i| (x[i], problem.lower[i], problem.upper[i], solution.y_box[i])));
    for (v, lo, hi, y) in rows {
        out.primal = out.primal.max(row_violation(v, lo, hi));
        let (comp, sign) = row_dual(v, lo, hi, y);
        out.complementarity = out.complementarity.max(comp);
        out.dual_sign = out.dual_sign.max(sign);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_catches_shape_and_symmetry() {
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2));
        assert!(p.validate().is_ok());
        let bad = QpProblem::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), DVector::zeros(2));
        assert!(bad.validate().is_err());
        let bad = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(3));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kkt_of_known_solution() {
        // min x1² + x2² s.t. x1 + x2 = 2 → x = (1,1), y = −2
        let p = QpProblem::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2))
            .with_equality(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![2.0]));
        let s = QpSolution {
            x: DVector::from_vec(vec![1.0, 1.0]),
            y_eq: DVector::from_vec(vec![-2.0]),
            y_in: DVector::zeros(0),
            y_box: DVector::zeros(2),
            objective: 2.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            status: SolveStatus::Optimal,
            polished: false,
        };
        assert_eq!(kkt_residuals(&p, &s).max(), 0.0);
        let mut wrong = s.clone();
        wrong.x[0] = 1.5;
        assert!(kkt_residuals(&p, &wrong).max() > 0.4);
    }
}
