use rand::Rng;

use super::Excitation;
use crate::error::{Error, Result};
use crate::koopman::Trajectory;
use crate::turbine::{mppt_equilibrium, mppt_reference, turbine_advance, ControlInput, TurbineParams};

/// Samples a trajectory under MPPT plus piecewise-constant random offsets.
///
/// `advance(ω_k, u_k)` integrates the plant over one control step and returns
/// `ω_{k+1}`. One sample is produced per wind value; the last sample carries
/// the input the rule would apply next. Near the speed limits the offset is
/// forced to push the rotor back inside (a negative offset when below
/// `omega_min`, positive above `omega_max`), which keeps long histories at
/// low or high wind from stalling or over-speeding the rotor.
pub fn excited_trajectory<R, F>(
    wind: &[f64],
    omega0: f64,
    params: &TurbineParams,
    excitation: &Excitation,
    rng: &mut R,
    mut advance: F,
) -> Result<Trajectory>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64, &ControlInput) -> Result<f64>,
{
    excitation.validate()?;
    let mut traj = Trajectory::with_capacity(wind.len());
    let mut omega = omega0;
    let mut offset = 0.0;
    let mut dwell = 0usize;
    for (k, &v) in wind.iter().enumerate() {
        if dwell == 0 {
            offset = if excitation.amplitude > 0.0 {
                rng.random_range(-excitation.amplitude..=excitation.amplitude)
            } else {
                0.0
            };
            dwell = rng.random_range(excitation.dwell_min..=excitation.dwell_max);
        }
        dwell -= 1;
        let guarded = if omega < params.omega_min {
            -offset.abs()
        } else if omega > params.omega_max {
            offset.abs()
        } else {
            offset
        };
        let p = (mppt_reference(omega, params) + guarded).clamp(params.p_min, params.p_max);
        let u = ControlInput::new(p, v);
        traj.push(omega, u);
        if k + 1 < wind.len() {
            omega = advance(k, omega, &u)?;
        }
    }
    Ok(traj)
}

/// Training history of the full turbine model starting from its MPPT
/// equilibrium at the first wind sample.
pub fn turbine_training_trajectory<R: Rng + ?Sized>(
    wind: &[f64],
    params: &TurbineParams,
    control_step: f64,
    substeps: usize,
    excitation: &Excitation,
    rng: &mut R,
) -> Result<Trajectory> {
    let first = *wind.first().ok_or_else(|| Error::InsufficientData("empty wind series".into()))?;
    let mut state = mppt_equilibrium(first, params)?;
    excited_trajectory(wind, state.omega_r, params, excitation, rng, |k, _, u| {
        state = turbine_advance(&state, u, control_step, substeps, params).map_err(|e| match e {
            Error::Divergence { reason, .. } => Error::Divergence { time: k as f64 * control_step, reason },
            other => other,
        })?;
        Ok(state.omega_r)
    })
}
