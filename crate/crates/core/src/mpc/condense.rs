//! Elimination of the lifted states.
//!
//! For group `i` with model `(A, B = [b_p b_v])` and measured `ω₀`, the
//! predicted rotor speeds over the horizon are affine in its references:
//!
//! ```text
//! ω = c + G P,   c_k = e₁ᵀ z_k (free response under the wind forecast)
//!                G_kj = e₁ᵀ A^{k−j} b_p   (j ≤ k)
//! ```
//!
//! The step differences `(ω_{k+1} − ω_k)` are then `F P + f` with `F` and
//! `f` the first differences of `G` and `c` (the first one taken against the
//! measured `ω₀`), so each group contributes the block `2w FᵀF` to the cost.

use nalgebra::{DMatrix, DVector};

use super::{MpcConfig, QpProblem};
use crate::error::{Error, Result};
use crate::koopman::LiftedModel;
use crate::turbine::ControlInput;

/// Affine rotor-speed prediction of one group over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPrediction {
    /// Free response `c` (length `T`).
    pub free: DVector<f64>,
    /// Markov parameters `e₁ᵀ A^j b_p`, `j = 0..T`.
    pub markov: Vec<f64>,
}

impl GroupPrediction {
    /// Predicted speeds `[ω̂₁, …, ω̂_T]` for the references `p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.free.len()).map(|k| self.free[k] + (0..=k).map(|j| self.markov[k - j] * p[j]).sum::<f64>()).collect()
    }
}

fn check_model(model: &LiftedModel) -> Result<()> {
    let n = model.map.dim();
    if model.a.shape() != (n, n) || model.b.shape() != (n, 2) {
        return Err(Error::Dimension(format!(
            "model matrices {:?}/{:?} do not match lifted dimension {n}",
            model.a.shape(),
            model.b.shape()
        )));
    }
    Ok(())
}

/// Condenses one group's lifted dynamics over `horizon` steps.
pub fn condense_group(
    model: &LiftedModel,
    omega0: f64,
    u0: &ControlInput,
    wind: &[f64],
    horizon: usize,
) -> Result<GroupPrediction> {
    check_model(model)?;
    if wind.len() < horizon {
        return Err(Error::Dimension(format!("wind forecast has {} steps, need {horizon}", wind.len())));
    }
    let n = model.dim();
    let b_p = model.b.column(0);
    let b_v = model.b.column(1);

    let mut z = model.map.lift(omega0, u0)?;
    let mut free = DVector::zeros(horizon);
    let mut next = DVector::zeros(n);
    for (k, &v) in wind.iter().take(horizon).enumerate() {
        next.gemv(1.0, &model.a, &z, 0.0);
        next.axpy(v, &b_v, 1.0);
        std::mem::swap(&mut z, &mut next);
        free[k] = z[0];
    }

    let mut row = DVector::zeros(n);
    row[0] = 1.0;
    let mut markov = Vec::with_capacity(horizon);
    let mut tmp = DVector::zeros(n);
    for _ in 0..horizon {
        markov.push(row.dot(&b_p));
        // row ← Aᵀ row, i.e. e₁ᵀA^{j+1} as a column
        tmp.gemv_tr(1.0, &model.a, &row, 0.0);
        std::mem::swap(&mut row, &mut tmp);
    }
    if free.iter().chain(markov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("condensed prediction"));
    }
    Ok(GroupPrediction { free, markov })
}

/// Builds the dense MPC problem over the stacked references
/// `x[i·T + k] = P_ref` of group `i` at step `k`.
pub fn build_qp(
    models: &[LiftedModel],
    init: &[(f64, ControlInput)],
    wind_forecast: &[Vec<f64>],
    delta_f: f64,
    p_mppt: &[f64],
    config: &MpcConfig,
) -> Result<QpProblem> {
    Ok(build_qp_with_predictions(models, init, wind_forecast, delta_f, p_mppt, config)?.0)
}

/// As [`build_qp`], also returning the per-group predictions.
pub fn build_qp_with_predictions(
    models: &[LiftedModel],
    init: &[(f64, ControlInput)],
    wind_forecast: &[Vec<f64>],
    delta_f: f64,
    p_mppt: &[f64],
    config: &MpcConfig,
) -> Result<(QpProblem, Vec<GroupPrediction>)> {
    config.validate()?;
    let m = models.len();
    if m == 0 || init.len() != m || wind_forecast.len() != m || p_mppt.len() != m {
        return Err(Error::Dimension(format!(
            "{m} models, {} initial states, {} forecasts, {} MPPT references",
            init.len(),
            wind_forecast.len(),
            p_mppt.len()
        )));
    }
    if !delta_f.is_finite() {
        return Err(Error::NonFinite("frequency deviation"));
    }
    let t = config.horizon;
    let nv = m * t;
    let w = config.objective_weight;

    let mut h = DMatrix::zeros(nv, nv);
    let mut g = DVector::zeros(nv);
    let mut constant = 0.0;
    let mut a_in = DMatrix::zeros(nv, nv);
    let mut lo_in = DVector::zeros(nv);
    let mut hi_in = DVector::zeros(nv);
    let mut preds = Vec::with_capacity(m);

    for (i, model) in models.iter().enumerate() {
        let (omega0, u0) = init[i];
        let pred = condense_group(model, omega0, &u0, &wind_forecast[i], t)?;
        let off = i * t;
        // difference rows: F_kj = h_{k−j} − h_{k−1−j}
        let diff_markov: Vec<f64> =
            (0..t).map(|d| pred.markov[d] - if d > 0 { pred.markov[d - 1] } else { 0.0 }).collect();
        let f: Vec<f64> = (0..t).map(|k| pred.free[k] - if k > 0 { pred.free[k - 1] } else { omega0 }).collect();
        let mut fm = DMatrix::zeros(t, t);
        for k in 0..t {
            for j in 0..=k {
                fm[(k, j)] = diff_markov[k - j];
            }
        }
        let fv = DVector::from_vec(f);
        let block = fm.tr_mul(&fm) * (2.0 * w);
        h.view_mut((off, off), (t, t)).copy_from(&block);
        g.rows_mut(off, t).copy_from(&(fm.tr_mul(&fv) * (2.0 * w)));
        constant += w * fv.norm_squared();

        for k in 0..t {
            for j in 0..=k {
                a_in[(off + k, off + j)] = pred.markov[k - j];
            }
            lo_in[off + k] = config.omega_min + config.omega_margin - pred.free[k];
            hi_in[off + k] = config.omega_max - config.omega_margin - pred.free[k];
        }
        preds.push(pred);
    }
    // exact symmetry regardless of rounding in FᵀF
    let h = (&h + h.transpose()) * 0.5;

    let target = p_mppt.iter().sum::<f64>() - config.k_df * delta_f;
    let mut a_eq = DMatrix::zeros(t, nv);
    for k in 0..t {
        for i in 0..m {
            a_eq[(k, i * t + k)] = 1.0;
        }
    }
    let b_eq = DVector::from_element(t, target);

    let problem = QpProblem {
        h,
        g,
        constant,
        a_eq,
        b_eq,
        a_in,
        ineq_lower: lo_in,
        ineq_upper: hi_in,
        lower: DVector::from_element(nv, config.p_min),
        upper: DVector::from_element(nv, config.p_max),
    };
    problem.validate()?;
    Ok((problem, preds))
}
