//! Receding-horizon dispatch of the farm's active-power references.
//!
//! Each step minimizes the summed squared rotor-speed increments of all
//! groups over the horizon subject to the farm-level droop response at every
//! step, box bounds on the references and rotor-speed bounds through the
//! lifted predictors.

mod admm;
mod condense;
mod controller;
mod qp;

pub use admm::{solve_qp, SolverSettings, WarmStart};
pub use condense::{build_qp, build_qp_with_predictions, condense_group, GroupPrediction};
pub use controller::{mpc_step, DispatchLog, DispatchRecord, MpcController, MpcDecision};
pub use qp::{kkt_residuals, KktResiduals, QpProblem, QpSolution, SolveStatus};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::turbine::TurbineParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Prediction horizon (control steps).
    pub horizon: usize,
    /// Control step (s).
    pub control_step: f64,
    /// Speed-droop ratio (p.u./Hz).
    pub k_df: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Tightening of the rotor-speed bounds to absorb prediction error (p.u.).
    pub omega_margin: f64,
    /// Cubic MPPT gain of the local controllers.
    pub k_opt: f64,
    /// Weight on the squared speed increments. Rotor-speed steps are of
    /// order 1e-3 p.u., so the default brings the cost to order one and
    /// makes the absolute solver tolerance meaningful.
    pub objective_weight: f64,
    /// Control steps between model refits (0 disables refits).
    pub refresh_interval: usize,
    /// Refit window length in snapshot pairs.
    pub window: usize,
    pub solver: SolverSettings,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self::for_turbine(&TurbineParams::default())
    }
}

impl MpcConfig {
    /// Defaults with bounds and MPPT gain taken from the turbine parameters.
    pub fn for_turbine(params: &TurbineParams) -> Self {
        Self {
            horizon: 100,
            control_step: 0.1,
            k_df: 0.2,
            omega_min: params.omega_min,
            omega_max: params.omega_max,
            p_min: params.p_min,
            p_max: params.p_max,
            omega_margin: 0.01,
            k_opt: params.k_opt,
            objective_weight: 1e4,
            refresh_interval: 100,
            window: crate::koopman::DEFAULT_WINDOW,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least one step"));
        }
        if !(self.control_step > 0.0) {
            return Err(Error::invalid("control step must be positive"));
        }
        if !(self.k_df >= 0.0 && self.k_df.is_finite()) {
            return Err(Error::invalid("droop ratio must be non-negative"));
        }
        if !(self.omega_min < self.omega_max && self.p_min < self.p_max) {
            return Err(Error::invalid("MPC bounds are inverted"));
        }
        if !(self.omega_margin >= 0.0 && 2.0 * self.omega_margin < self.omega_max - self.omega_min) {
            return Err(Error::invalid("rotor-speed margin closes the admissible band"));
        }
        if !(self.objective_weight > 0.0) {
            return Err(Error::invalid("objective weight must be positive"));
        }
        self.solver.validate()
    }

    /// Local-controller reference `k_opt ω³` clipped to the power box.
    pub fn mppt(&self, omega_r: f64) -> f64 {
        (self.k_opt * omega_r.powi(3)).clamp(self.p_min, self.p_max)
    }
}

/// Local droop: `P_i = P_MPPT,i − share_i · K_df · Δf`, clamped to `bounds`.
pub fn droop_reference(
    p_mppt: &[f64],
    delta_f: f64,
    shares: &[f64],
    k_df: f64,
    bounds: (f64, f64),
) -> Result<Vec<f64>> {
    if p_mppt.len() != shares.len() {
        return Err(Error::Dimension(format!("{} references but {} shares", p_mppt.len(), shares.len())));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 || shares.iter().any(|s| *s < 0.0) {
        return Err(Error::invalid(format!("droop shares must be non-negative and sum to 1, got {total}")));
    }
    Ok(p_mppt.iter().zip(shares).map(|(p, s)| (p - s * k_df * delta_f).clamp(bounds.0, bounds.1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn droop_arithmetic() {
        let shares = [1.0 / 3.0; 3];
        let p = droop_reference(&[0.4, 0.5, 0.6], -0.5, &shares, 0.2, (0.0, 1.1)).unwrap();
        for (got, base) in p.iter().zip([0.4, 0.5, 0.6]) {
            assert!((got - base - 0.1 / 3.0).abs() < 1e-12);
        }
        let zero = droop_reference(&[0.4, 0.5], 0.0, &[0.5, 0.5], 0.3, (0.0, 1.1)).unwrap();
        assert_eq!(zero, vec![0.4, 0.5]);
        assert!(droop_reference(&[0.4], 0.1, &[0.5], 0.2, (0.0, 1.1)).is_err());
    }

    #[test]
    fn droop_clamps() {
        let p = droop_reference(&[1.08], -1.0, &[1.0], 0.3, (0.0, 1.1)).unwrap();
        assert_eq!(p, vec![1.1]);
    }

    #[test]
    fn config_validation() {
        assert!(MpcConfig::default().validate().is_ok());
        assert!(MpcConfig { horizon: 0, ..MpcConfig::default() }.validate().is_err());
        assert!(MpcConfig { k_df: -0.1, ..MpcConfig::default() }.validate().is_err());
    }
}
