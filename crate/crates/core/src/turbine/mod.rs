//! Electromechanical model of one aggregated DFIG turbine group.
//!
//! All powers and torques are per unit of the group rating, speeds are per
//! unit of [`TurbineParams::omega_base`], pitch angles are in degrees. A group
//! of `machines` identical turbines behaves like one machine on its own base,
//! so the per-unit dynamics are those of a single turbine.

mod aero;
mod drivetrain;
mod pitch;

pub use aero::{cp_curve, mechanical_power, mppt_reference, tip_speed_ratio, CpCoefficients};
pub use drivetrain::{dissipated_power, mppt_equilibrium, stored_energy, turbine_advance, turbine_step};
pub use pitch::{pitch_step, PitchParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of one turbine group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineParams {
    /// Air density (kg/m³).
    pub rho: f64,
    /// Blade radius (m).
    pub radius: f64,
    /// Turbine-side inertia constant (s).
    pub h_turbine: f64,
    /// Generator-side inertia constant (s).
    pub h_generator: f64,
    /// Shaft stiffness (p.u. torque per rad of twist).
    pub shaft_stiffness: f64,
    /// Shaft damping (p.u. torque per p.u. speed difference). Zero gives the
    /// undamped two-mass model.
    pub shaft_damping: f64,
    /// Rated power of one machine (MW).
    pub rated_power_mw: f64,
    /// Number of identical machines represented by the group.
    pub machines: u32,
    /// Base mechanical rotor speed (rad/s).
    pub omega_base: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Wind speed at which the machine reaches rated power on the optimal
    /// tip-speed ratio (m/s). Pitch control only acts above it.
    pub v_nominal: f64,
    pub cp: CpCoefficients,
    pub pitch: PitchParams,
    /// Gain of the cubic MPPT law `P = k_opt * omega^3` (p.u.).
    pub k_opt: f64,
}

impl Default for TurbineParams {
    fn default() -> Self {
        Self {
            rho: 1.225,
            radius: 38.5,
            h_turbine: 4.33,
            h_generator: 0.62,
            shaft_stiffness: 350.0,
            shaft_damping: 1.5,
            rated_power_mw: 1.5,
            machines: 50,
            omega_base: 1.745,
            omega_min: 0.7,
            omega_max: 1.3,
            p_min: 0.0,
            p_max: 1.1,
            v_nominal: 10.31,
            cp: CpCoefficients::default(),
            pitch: PitchParams::default(),
            k_opt: 0.5207,
        }
    }
}

impl TurbineParams {
    /// Swept rotor area π R² (m²).
    pub fn swept_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Group rating in MW.
    pub fn group_rating_mw(&self) -> f64 {
        self.rated_power_mw * self.machines as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("radius", self.radius),
            ("h_turbine", self.h_turbine),
            ("h_generator", self.h_generator),
            ("shaft_stiffness", self.shaft_stiffness),
            ("rated_power_mw", self.rated_power_mw),
            ("omega_base", self.omega_base),
            ("omega_max", self.omega_max),
            ("v_nominal", self.v_nominal),
            ("k_opt", self.k_opt),
            ("pitch.servo_time_constant", self.pitch.servo_time_constant),
            ("pitch.rate_limit", self.pitch.rate_limit),
            ("pitch.theta_max", self.pitch.theta_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if self.machines == 0 {
            return Err(Error::invalid("machines must be at least 1"));
        }
        if !(self.shaft_damping >= 0.0) {
            return Err(Error::invalid("shaft_damping must be non-negative"));
        }
        if !(self.omega_min < self.omega_max) {
            return Err(Error::invalid("omega_min must be below omega_max"));
        }
        if !(self.p_min < self.p_max) {
            return Err(Error::invalid("p_min must be below p_max"));
        }
        Ok(())
    }
}

/// Electromechanical state of one turbine group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineState {
    /// Turbine-side rotor speed (p.u.).
    pub omega_r: f64,
    /// Generator-side speed (p.u.).
    pub omega_g: f64,
    /// Shaft twist (rad).
    pub delta_rg: f64,
    /// Blade pitch angle (deg).
    pub theta: f64,
    /// Integral state of the pitch PI controller (deg).
    pub pitch_integrator: f64,
}

impl TurbineState {
    /// Rigid-shaft state at speed `omega` transmitting `p_ref` with no pitch.
    pub fn locked(omega: f64, p_ref: f64, params: &TurbineParams) -> Self {
        Self {
            omega_r: omega,
            omega_g: omega,
            delta_rg: p_ref / omega / params.shaft_stiffness,
            theta: 0.0,
            pitch_integrator: 0.0,
        }
    }
}

/// Exogenous input of one turbine group: dispatch reference and local wind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Active power reference (p.u.).
    pub p_ref: f64,
    /// Local wind speed (m/s).
    pub v_w: f64,
}

impl ControlInput {
    pub fn new(p_ref: f64, v_w: f64) -> Self {
        Self { p_ref, v_w }
    }
}
