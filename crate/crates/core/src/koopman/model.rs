use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{collect_snapshots, ObservableMap, SnapshotSet, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{right_lstsq, PINV_RCOND};
use crate::turbine::ControlInput;

/// Linear predictor `z_{k+1} = A z_k + B u_k` in lifted coordinates with
/// the rotor speed read from `z[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub map: ObservableMap,
    /// Sum of squared one-step residuals `‖Z' − A Z − B U‖²_F` on the fit data.
    pub fit_residual: f64,
}

/// Options for the least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Relative singular-value cutoff of the pseudoinverse.
    pub rcond: f64,
    /// Scale each regressor row to unit RMS before the decomposition. The
    /// result is mapped back to raw coordinates.
    pub normalize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { rcond: PINV_RCOND, normalize: false }
    }
}

/// Minimum-norm least-squares `[A B] = Z' [Z; U]⁺`.
///
/// Returns `(A, B, residual)` with the Frobenius residual squared.
pub fn fit_linear(
    z: &DMatrix<f64>,
    z_next: &DMatrix<f64>,
    u: &DMatrix<f64>,
    options: FitOptions,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let n = z.nrows();
    let m = u.nrows();
    let cols = z.ncols();
    if z_next.shape() != z.shape() || u.ncols() != cols {
        return Err(Error::Dimension(format!(
            "snapshot shapes disagree: Z {:?}, Z' {:?}, U {:?}",
            z.shape(),
            z_next.shape(),
            u.shape()
        )));
    }
    if cols == 0 {
        return Err(Error::InsufficientData("no snapshot pairs to fit".into()));
    }
    let mut x = DMatrix::zeros(n + m, cols);
    x.rows_mut(0, n).copy_from(z);
    x.rows_mut(n, m).copy_from(u);

    let scale: Vec<f64> = if options.normalize {
        (0..n + m)
            .map(|i| {
                let rms = (x.row(i).norm_squared() / cols as f64).sqrt();
                if rms > 0.0 {
                    1.0 / rms
                } else {
                    1.0
                }
            })
            .collect()
    } else {
        vec![1.0; n + m]
    };
    for (i, &s) in scale.iter().enumerate() {
        x.row_mut(i).scale_mut(s);
    }
    let mut theta = right_lstsq(z_next, &x, options.rcond)?;
    for (j, &s) in scale.iter().enumerate() {
        theta.column_mut(j).scale_mut(s);
        x.row_mut(j).scale_mut(1.0 / s);
    }
    let residual = (z_next - &theta * &x).norm_squared();
    let a = theta.columns(0, n).into_owned();
    let b = theta.columns(n, m).into_owned();
    Ok((a, b, residual))
}

/// Fits a lifted model on a snapshot set with default options.
pub fn fit_model(snapshots: &SnapshotSet) -> Result<LiftedModel> {
    fit_model_with(snapshots, FitOptions::default())
}

pub fn fit_model_with(snapshots: &SnapshotSet, options: FitOptions) -> Result<LiftedModel> {
    if snapshots.z.nrows() != snapshots.map.dim() {
        return Err(Error::Dimension(format!(
            "snapshots have {} rows but the observables have dimension {}",
            snapshots.z.nrows(),
            snapshots.map.dim()
        )));
    }
    let (a, b, fit_residual) = fit_linear(&snapshots.z, &snapshots.z_next, &snapshots.u, options)?;
    Ok(LiftedModel { a, b, map: snapshots.map.clone(), fit_residual })
}

/// Refits on a new window of data, keeping the model's observables.
pub fn update_model(model: &LiftedModel, window: &SnapshotSet) -> Result<LiftedModel> {
    if window.map != model.map {
        return Err(Error::Dimension("window was lifted with different observables".into()));
    }
    fit_model(window)
}

impl LiftedModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Open-loop rotor-speed forecast `[ω̂₁, …, ω̂_T]` from `omega0` under
    /// `inputs[0..T]`. The initial lift uses `inputs[0]`.
    pub fn predict(&self, omega0: f64, inputs: &[ControlInput]) -> Result<Vec<f64>> {
        let Some(first) = inputs.first() else {
            return Ok(Vec::new());
        };
        let mut z = self.map.lift(omega0, first)?;
        let mut next = DVector::zeros(self.dim());
        let mut out = Vec::with_capacity(inputs.len());
        for u in inputs {
            next.gemv(1.0, &self.a, &z, 0.0);
            for i in 0..next.len() {
                next[i] += self.b[(i, 0)] * u.p_ref + self.b[(i, 1)] * u.v_w;
            }
            std::mem::swap(&mut z, &mut next);
            out.push(z[0]);
        }
        Ok(out)
    }

    /// Root-mean-square error of `horizon`-step open-loop forecasts started
    /// at every `stride`-th sample of `trajectory`.
    ///
    /// Returns `f64::INFINITY` if any forecast blows up.
    pub fn prediction_rmse(&self, trajectory: &Trajectory, horizon: usize, stride: usize) -> Result<f64> {
        if horizon == 0 || trajectory.len() <= horizon {
            return Err(Error::InsufficientData(format!(
                "need more than {horizon} samples, have {}",
                trajectory.len()
            )));
        }
        let stride = stride.max(1);
        let mut sum = 0.0;
        let mut count = 0usize;
        for s in (0..trajectory.len() - horizon).step_by(stride) {
            let pred = self.predict(trajectory.omega_r[s], &trajectory.inputs[s..s + horizon])?;
            for (k, w) in pred.iter().enumerate() {
                let e = w - trajectory.omega_r[s + 1 + k];
                sum += e * e;
            }
            count += horizon;
        }
        let rmse = (sum / count as f64).sqrt();
        Ok(if rmse.is_finite() { rmse } else { f64::INFINITY })
    }
}

/// Candidate α values `α₀·2^k`, `k = −5..=2`.
pub fn alpha_grid(alpha0: f64) -> Vec<f64> {
    (-5..=2).map(|k| alpha0 * 2f64.powi(k)).collect()
}

/// Result of the α search.
#[derive(Debug, Clone)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub model: LiftedModel,
    /// Training-data multi-step RMSE per candidate, in candidate order.
    pub scores: Vec<(f64, f64)>,
}

/// Fits a physics-informed model for each candidate α on `training` and
/// keeps the one with the smallest `horizon`-step open-loop RMSE on the same
/// data. Ties go to the earlier candidate.
pub fn select_alpha(
    training: &Trajectory,
    candidates: &[f64],
    horizon: usize,
    stride: usize,
) -> Result<AlphaSelection> {
    let mut best: Option<(f64, LiftedModel, f64)> = None;
    let mut scores = Vec::with_capacity(candidates.len());
    for &alpha in candidates {
        let map = ObservableMap::sdmd(alpha)?;
        let model = fit_model(&collect_snapshots(training, &map)?)?;
        let score = model.prediction_rmse(training, horizon, stride)?;
        scores.push((alpha, score));
        if best.as_ref().is_none_or(|b| score < b.2) {
            best = Some((alpha, model, score));
        }
    }
    let (alpha, model, _) = best.ok_or_else(|| Error::invalid("alpha search needs at least one candidate"))?;
    Ok(AlphaSelection { alpha, model, scores })
}

/// Fixed-length buffer of the most recent samples of one group, used to
/// refit its model online.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    samples: VecDeque<(f64, ControlInput)>,
    pairs: usize,
}

impl SlidingWindow {
    /// A window that holds `pairs` snapshot pairs (`pairs + 1` samples).
    pub fn new(pairs: usize) -> Self {
        Self { samples: VecDeque::with_capacity(pairs + 1), pairs: pairs.max(1) }
    }

    pub fn push(&mut self, omega_r: f64, u: ControlInput) {
        if self.samples.len() == self.pairs + 1 {
            self.samples.pop_front();
        }
        self.samples.push_back((omega_r, u));
    }

    pub fn extend(&mut self, trajectory: &Trajectory) {
        for (&w, &u) in trajectory.omega_r.iter().zip(&trajectory.inputs) {
            self.push(w, u);
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trajectory(&self) -> Trajectory {
        let mut t = Trajectory::with_capacity(self.samples.len());
        for &(w, u) in &self.samples {
            t.push(w, u);
        }
        t
    }

    pub fn snapshots(&self, map: &ObservableMap) -> Result<SnapshotSet> {
        collect_snapshots(&self.trajectory(), map)
    }
}
