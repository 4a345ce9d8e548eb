//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by the least-squares fits.
pub const PINV_RCOND: f64 = 1e-10;

/// Minimum-norm least-squares solution of `Θ X ≈ Y`, i.e. `Θ = Y X⁺`.
///
/// `x` is `p × N` (regressors in columns), `y` is `n × N`. The pseudoinverse
/// comes from an SVD of `x`; singular values below `rcond · σ_max` are
/// treated as zero.
pub fn right_lstsq(y: &DMatrix<f64>, x: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    if y.ncols() != x.ncols() {
        return Err(Error::Dimension(format!("regressor columns {} != target columns {}", x.ncols(), y.ncols())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least-squares data"));
    }
    let p = x.nrows();
    // Work with the tall transpose so U is N × r and Vᵀ is r × p.
    let svd = x.transpose().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = rcond * smax;
    // Xᵀ = U Σ Vᵀ  ⇒  X⁺ = U Σ⁺ Vᵀ (N × p)  ⇒  Θ = Y U Σ⁺ Vᵀ
    let mut yu = y * u;
    for (j, &s) in sigma.iter().enumerate() {
        let inv = if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 };
        yu.column_mut(j).scale_mut(inv);
    }
    let theta = yu * v_t;
    debug_assert_eq!(theta.ncols(), p);
    Ok(theta)
}

/// Infinity norm of a vector (0 for empty).
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `K x = b` for symmetric `K` using LU with a few steps of iterative
/// refinement against the original matrix.
pub fn solve_refined(k: &DMatrix<f64>, b: &DVector<f64>, refine: usize) -> Option<DVector<f64>> {
    let lu = k.clone().lu();
    let mut x = lu.solve(b)?;
    for _ in 0..refine {
        let r = b - k * &x;
        let dx = lu.solve(&r)?;
        x += dx;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_system_recovered() {
        let theta = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let x = DMatrix::from_fn(3, 20, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + (j as f64).sin());
        let y = &theta * &x;
        let est = right_lstsq(&y, &x, PINV_RCOND).unwrap();
        assert!((est - theta).norm() < 1e-10);
    }

    #[test]
    fn minimum_norm_when_underdetermined() {
        // one sample, three regressors
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let y = DMatrix::from_column_slice(1, 1, &[9.0]);
        let est = right_lstsq(&y, &x, PINV_RCOND).unwrap();
        // min-norm solution is y xᵀ/‖x‖²
        let expected = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 2.0]);
        assert!((est - expected).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let x = DMatrix::from_column_slice(1, 2, &[1.0, f64::NAN]);
        let y = DMatrix::from_column_slice(1, 2, &[1.0, 2.0]);
        assert!(right_lstsq(&y, &x, PINV_RCOND).is_err());
    }
}
