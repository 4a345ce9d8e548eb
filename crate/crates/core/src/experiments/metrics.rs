use serde::{Deserialize, Serialize};

use super::Policy;
use crate::error::{Error, Result};

/// Average rotor-speed distortion
/// `γ = (1/(M·K)) Σᵢ Σₖ |ωᵢ_{k+1} − ωᵢ_k| / T_s` over groups `i` and steps `k`.
pub fn rotor_speed_distortion(series: &[Vec<f64>], control_step: f64) -> Result<f64> {
    if !(control_step > 0.0) {
        return Err(Error::domain("control step must be positive"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for s in series {
        if s.len() < 2 {
            return Err(Error::InsufficientData("distortion needs at least two samples per series".into()));
        }
        total += s.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        count += s.len() - 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no rotor-speed series".into()));
    }
    Ok(total / count as f64 / control_step)
}

/// Minimum of a frequency trace and the index where it occurs.
pub fn nadir(frequency: &[f64]) -> Option<(usize, f64)> {
    frequency.iter().copied().enumerate().fold(None, |best, (i, f)| match best {
        Some((_, b)) if b <= f => best,
        _ => Some((i, f)),
    })
}

/// Optimizer statistics over a closed-loop run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub solves: usize,
    pub optimal: usize,
    pub fallbacks: usize,
    pub polished: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    /// Largest independently recomputed KKT residual over optimal solves.
    pub max_kkt_residual: f64,
}

/// Outcome of one frequency-response run. A pure function of the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: Policy,
    pub k_df: f64,
    /// Rotor-speed distortion (p.u./s).
    pub gamma: f64,
    pub nadir_hz: f64,
    pub nadir_time_s: f64,
    /// Frequency at the end of the run (Hz).
    pub final_frequency_hz: f64,
    /// `Σₖ Σᵢ (P_ref − P_MPPT) · T_s` (p.u.·s on the turbine base).
    pub farm_energy_deviation: f64,
    pub omega_min: Vec<f64>,
    pub omega_max: Vec<f64>,
    /// Largest `|Σᵢ(P_ref − P_MPPT) + K_df Δf|` over control steps.
    pub max_droop_residual: f64,
    pub solver: Option<SolverStats>,
    /// Selected α (or 0 for RBF models) per group, for model-based runs.
    pub model_alpha: Vec<f64>,
}

impl MetricsReport {
    /// `key = value` lines, stable across runs.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str(&format!("policy = {}\n", self.policy.as_str()));
        s.push_str(&format!("k_df = {}\n", self.k_df));
        s.push_str(&format!("gamma = {:.6e}\n", self.gamma));
        s.push_str(&format!("nadir_hz = {:.5}\n", self.nadir_hz));
        s.push_str(&format!("nadir_time_s = {:.2}\n", self.nadir_time_s));
        s.push_str(&format!("final_frequency_hz = {:.5}\n", self.final_frequency_hz));
        s.push_str(&format!("farm_energy_deviation = {:.6e}\n", self.farm_energy_deviation));
        s.push_str(&format!("omega_min = [{}]\n", list(&self.omega_min)));
        s.push_str(&format!("omega_max = [{}]\n", list(&self.omega_max)));
        s.push_str(&format!("max_droop_residual = {:.3e}\n", self.max_droop_residual));
        if !self.model_alpha.is_empty() {
            s.push_str(&format!("model_alpha = [{}]\n", list(&self.model_alpha)));
        }
        if let Some(st) = &self.solver {
            s.push_str(&format!(
                "solver = {{ solves = {}, optimal = {}, fallbacks = {}, polished = {}, max_iterations = {}, mean_iterations = {:.1}, max_kkt_residual = {:.3e} }}\n",
                st.solves, st.optimal, st.fallbacks, st.polished, st.max_iterations, st.mean_iterations, st.max_kkt_residual
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_no_distortion() {
        assert_eq!(rotor_speed_distortion(&[vec![1.0; 10], vec![0.9; 10]], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn ramp_gives_slope() {
        let s: Vec<f64> = (0..101).map(|k| 1.0 - 0.02 * 0.1 * k as f64).collect();
        let g = rotor_speed_distortion(&[s], 0.1).unwrap();
        assert!((g - 0.02).abs() < 1e-12);
    }

    #[test]
    fn absolute_value_does_not_telescope() {
        let s = vec![1.0, 1.1, 1.0, 1.1, 1.0];
        assert!((rotor_speed_distortion(&[s], 0.1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        assert!(rotor_speed_distortion(&[vec![1.0]], 0.1).is_err());
        assert!(rotor_speed_distortion(&[], 0.1).is_err());
    }

    #[test]
    fn nadir_first_minimum() {
        assert_eq!(nadir(&[50.0, 49.5, 49.4, 49.4, 49.8]), Some((2, 49.4)));
        assert_eq!(nadir(&[]), None);
    }
}
