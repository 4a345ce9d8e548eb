use serde::{Deserialize, Serialize};

use super::{TurbineParams, TurbineState};

/// Overspeed protection loop: PI on `omega_r - omega_set` feeding a
/// first-order servo with rate and angle saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchParams {
    /// Servo lag (s).
    pub servo_time_constant: f64,
    /// Maximum pitch rate (deg/s).
    pub rate_limit: f64,
    /// Upper angle limit (deg); the lower limit is 0.
    pub theta_max: f64,
    /// Proportional gain (deg per p.u. overspeed).
    pub kp: f64,
    /// Integral gain (deg per p.u. overspeed per second).
    pub ki: f64,
    /// Speed setpoint of the protection loop (p.u.).
    pub omega_set: f64,
}

impl Default for PitchParams {
    fn default() -> Self {
        Self { servo_time_constant: 0.3, rate_limit: 10.0, theta_max: 45.0, kp: 150.0, ki: 25.0, omega_set: 1.25 }
    }
}

/// Advances the pitch angle and controller integrator by `dt`.
///
/// The command is held at zero (and the integrator reset) while the wind is
/// at or below nominal; the servo still relaxes any residual angle.
pub fn pitch_step(state: &TurbineState, v_w: f64, dt: f64, params: &TurbineParams) -> (f64, f64) {
    let pp = &params.pitch;
    let (command, integrator) = if v_w > params.v_nominal {
        let error = state.omega_r - pp.omega_set;
        let integrator = (state.pitch_integrator + pp.ki * error * dt).clamp(0.0, pp.theta_max);
        ((pp.kp * error + integrator).clamp(0.0, pp.theta_max), integrator)
    } else {
        (0.0, 0.0)
    };
    let rate = ((command - state.theta) / pp.servo_time_constant).clamp(-pp.rate_limit, pp.rate_limit);
    let theta = (state.theta + rate * dt).clamp(0.0, pp.theta_max);
    (theta, integrator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(omega: f64, theta: f64, integ: f64) -> TurbineState {
        TurbineState { omega_r: omega, omega_g: omega, delta_rg: 0.0, theta, pitch_integrator: integ }
    }

    #[test]
    fn inactive_below_nominal_wind() {
        let p = TurbineParams::default();
        let s = state(1.5, 0.0, 0.0);
        for _ in 0..100 {
            let (theta, integ) = pitch_step(&s, p.v_nominal - 0.5, 0.01, &p);
            assert_eq!(theta, 0.0);
            assert_eq!(integ, 0.0);
        }
    }

    #[test]
    fn rate_limited_under_large_error() {
        let p = TurbineParams::default();
        let dt = 0.01;
        let s = state(2.0, 0.0, 0.0);
        let (theta, _) = pitch_step(&s, 15.0, dt, &p);
        assert!((theta - p.pitch.rate_limit * dt).abs() < 1e-12);
        let s = state(0.5, 20.0, 0.0);
        let (theta, _) = pitch_step(&s, 15.0, dt, &p);
        assert!((20.0 - theta - p.pitch.rate_limit * dt).abs() < 1e-12);
    }

    #[test]
    fn zero_error_fixed_point() {
        let p = TurbineParams::default();
        let s = state(p.pitch.omega_set, 4.0, 4.0);
        let (theta, integ) = pitch_step(&s, 14.0, 0.01, &p);
        assert_eq!(theta, 4.0);
        assert_eq!(integ, 4.0);
    }

    #[test]
    fn angle_stays_in_range() {
        let p = TurbineParams::default();
        let mut s = state(1.6, 0.0, 0.0);
        for _ in 0..2000 {
            let (theta, integ) = pitch_step(&s, 20.0, 0.01, &p);
            s.theta = theta;
            s.pitch_integrator = integ;
            assert!((0.0..=p.pitch.theta_max).contains(&theta));
        }
        assert!((s.theta - p.pitch.theta_max).abs() < 1e-9);
    }
}
