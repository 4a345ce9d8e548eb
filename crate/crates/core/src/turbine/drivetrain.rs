//! Two-mass drive train.
//!
//! ```text
//! 2 H_R dω_r/dt = t_m − K_s δ − D_s (ω_r − ω_g)
//! 2 H_G dω_g/dt = K_s δ + D_s (ω_r − ω_g) − t_e
//!       dδ/dt   = ω_r − ω_g
//! t_m = P_m / ω_r,  t_e = P_ref / ω_g
//! ```

use super::{mechanical_power, mppt_reference, pitch_step, ControlInput, TurbineParams, TurbineState};
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
struct Mech {
    omega_r: f64,
    omega_g: f64,
    delta: f64,
}

impl Mech {
    fn axpy(self, h: f64, d: Mech) -> Mech {
        Mech {
            omega_r: self.omega_r + h * d.omega_r,
            omega_g: self.omega_g + h * d.omega_g,
            delta: self.delta + h * d.delta,
        }
    }
}

fn derivative(x: Mech, u: &ControlInput, theta: f64, params: &TurbineParams) -> Result<Mech> {
    let p_m = mechanical_power(u.v_w, x.omega_r, theta, params)?;
    let t_m = p_m / x.omega_r;
    let t_e = u.p_ref / x.omega_g;
    let t_shaft = params.shaft_stiffness * x.delta + params.shaft_damping * (x.omega_r - x.omega_g);
    Ok(Mech {
        omega_r: (t_m - t_shaft) / (2.0 * params.h_turbine),
        omega_g: (t_shaft - t_e) / (2.0 * params.h_generator),
        delta: x.omega_r - x.omega_g,
    })
}

fn check(x: &Mech, params: &TurbineParams) -> Result<()> {
    let upper = 2.0 * params.omega_max;
    let ok = |w: f64| w.is_finite() && w > 0.0 && w < upper;
    if ok(x.omega_r) && ok(x.omega_g) && x.delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            time: f64::NAN,
            reason: format!("rotor speed left (0, {upper}): omega_r = {}, omega_g = {}", x.omega_r, x.omega_g),
        })
    }
}

/// One classical RK4 step of the drive train with the pitch loop advanced
/// first and held over the step.
pub fn turbine_step(state: &TurbineState, u: &ControlInput, dt: f64, params: &TurbineParams) -> Result<TurbineState> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let x0 = Mech { omega_r: state.omega_r, omega_g: state.omega_g, delta: state.delta_rg };
    check(&x0, params)?;
    let (theta, pitch_integrator) = pitch_step(state, u.v_w, dt, params);

    let k1 = derivative(x0, u, theta, params)?;
    let x1 = x0.axpy(0.5 * dt, k1);
    check(&x1, params)?;
    let k2 = derivative(x1, u, theta, params)?;
    let x2 = x0.axpy(0.5 * dt, k2);
    check(&x2, params)?;
    let k3 = derivative(x2, u, theta, params)?;
    let x3 = x0.axpy(dt, k3);
    check(&x3, params)?;
    let k4 = derivative(x3, u, theta, params)?;

    let x = Mech {
        omega_r: x0.omega_r + dt / 6.0 * (k1.omega_r + 2.0 * k2.omega_r + 2.0 * k3.omega_r + k4.omega_r),
        omega_g: x0.omega_g + dt / 6.0 * (k1.omega_g + 2.0 * k2.omega_g + 2.0 * k3.omega_g + k4.omega_g),
        delta: x0.delta + dt / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta),
    };
    check(&x, params)?;
    Ok(TurbineState { omega_r: x.omega_r, omega_g: x.omega_g, delta_rg: x.delta, theta, pitch_integrator })
}

/// Advances `dt` with `substeps` equal RK4 steps.
pub fn turbine_advance(
    state: &TurbineState,
    u: &ControlInput,
    dt: f64,
    substeps: usize,
    params: &TurbineParams,
) -> Result<TurbineState> {
    let n = substeps.max(1);
    let h = dt / n as f64;
    let mut s = *state;
    for _ in 0..n {
        s = turbine_step(&s, u, h, params)?;
    }
    Ok(s)
}

/// `H_R ω_r² + H_G ω_g² + ½ K_s δ²`; its time derivative is
/// `P_m − P_e − D_s (ω_r − ω_g)²`.
pub fn stored_energy(state: &TurbineState, params: &TurbineParams) -> f64 {
    params.h_turbine * state.omega_r.powi(2)
        + params.h_generator * state.omega_g.powi(2)
        + 0.5 * params.shaft_stiffness * state.delta_rg.powi(2)
}

/// Power lost in the shaft damper.
pub fn dissipated_power(state: &TurbineState, params: &TurbineParams) -> f64 {
    params.shaft_damping * (state.omega_r - state.omega_g).powi(2)
}

/// Rigid-shaft MPPT operating point at constant wind `v_w`.
///
/// Solves `P_m(v_w, ω) = P_MPPT(ω)` on the branch above λ = 4, which holds
/// the stable optimum-tracking equilibrium. Above nominal wind, when that
/// speed exceeds the pitch set-point, the state is instead the pitch-regulated
/// point at the set-point with the balancing blade angle.
pub fn mppt_equilibrium(v_w: f64, params: &TurbineParams) -> Result<TurbineState> {
    if !(v_w > 0.0) {
        return Err(Error::domain(format!("wind speed must be positive, got {v_w}")));
    }
    let scale = params.omega_base * params.radius;
    let imbalance = |w: f64| -> Result<f64> { Ok(mechanical_power(v_w, w, 0.0, params)? - mppt_reference(w, params)) };
    let mut lo = 4.0 * v_w / scale;
    let mut hi = 2.0 * params.omega_max * 0.999;
    if imbalance(lo)? <= 0.0 {
        // no MPPT branch at this wind; sit at the lowest admissible point
        hi = lo;
    } else if imbalance(hi)? >= 0.0 {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if imbalance(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let omega = 0.5 * (lo + hi);
    let pp = &params.pitch;
    if v_w <= params.v_nominal || omega <= pp.omega_set {
        return Ok(TurbineState::locked(omega, mppt_reference(omega, params), params));
    }
    // above nominal wind the pitch loop holds the speed set-point; find the
    // angle that balances the aerodynamic power there
    let omega = pp.omega_set;
    let p_ref = mppt_reference(omega, params);
    let (mut lo, mut hi) = (0.0, pp.theta_max);
    if mechanical_power(v_w, omega, hi, params)? >= p_ref {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mechanical_power(v_w, omega, mid, params)? > p_ref {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let theta = 0.5 * (lo + hi);
    Ok(TurbineState { theta, pitch_integrator: theta, ..TurbineState::locked(omega, p_ref, params) })
}
