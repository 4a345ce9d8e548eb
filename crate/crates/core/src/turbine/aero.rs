use serde::{Deserialize, Serialize};

use super::TurbineParams;
use crate::error::{Error, Result};

/// Exclusive upper bound on the power coefficient.
pub const CP_UPPER: f64 = 0.6;

/// Coefficients `c1..c6` of the exponential power-coefficient approximation
///
/// ```text
/// cp(λ, θ) = c1 (c2/λi − c3 θ − c4) exp(−c5/λi) + c6 λ
/// 1/λi     = 1/(λ + 0.08 θ) − 0.035/(θ³ + 1)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpCoefficients(pub [f64; 6]);

impl Default for CpCoefficients {
    fn default() -> Self {
        Self([0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068])
    }
}

/// Power coefficient at tip-speed ratio `lambda` and pitch `theta` (deg),
/// clamped to `[0, CP_UPPER)`.
pub fn cp_curve(lambda: f64, theta: f64, coeffs: &CpCoefficients) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("tip-speed ratio must be positive, got {lambda}")));
    }
    if !(theta >= 0.0) {
        return Err(Error::domain(format!("pitch angle must be non-negative, got {theta}")));
    }
    let [c1, c2, c3, c4, c5, c6] = coeffs.0;
    let inv_li = 1.0 / (lambda + 0.08 * theta) - 0.035 / (theta.powi(3) + 1.0);
    // Past the pole of λi the polynomial factor is negative and the
    // exponential overflows; the clamped value is zero.
    if inv_li <= 0.0 {
        return Ok(0.0);
    }
    let cp = c1 * (c2 * inv_li - c3 * theta - c4) * (-c5 * inv_li).exp() + c6 * lambda;
    Ok(cp.clamp(0.0, CP_UPPER - f64::EPSILON))
}

/// λ = ω_r ω_base R / v_w.
pub fn tip_speed_ratio(omega_r: f64, v_w: f64, params: &TurbineParams) -> Result<f64> {
    if !(v_w > 0.0) {
        return Err(Error::domain(format!("wind speed must be positive, got {v_w}")));
    }
    Ok(omega_r * params.omega_base * params.radius / v_w)
}

/// Captured aerodynamic power in p.u. of the machine rating.
pub fn mechanical_power(v_w: f64, omega_r: f64, theta: f64, params: &TurbineParams) -> Result<f64> {
    if !(v_w >= 0.0) {
        return Err(Error::domain(format!("wind speed must be non-negative, got {v_w}")));
    }
    if v_w == 0.0 {
        return Ok(0.0);
    }
    let lambda = tip_speed_ratio(omega_r, v_w, params)?;
    let cp = if lambda > 0.0 { cp_curve(lambda, theta, &params.cp)? } else { 0.0 };
    let watts = 0.5 * params.rho * params.swept_area() * cp * v_w.powi(3);
    Ok(watts / (params.rated_power_mw * 1e6))
}

/// Cubic MPPT power order, clamped to the power bounds.
pub fn mppt_reference(omega_r: f64, params: &TurbineParams) -> f64 {
    let omega = omega_r.max(0.0);
    (params.k_opt * omega.powi(3)).clamp(params.p_min, params.p_max)
}
