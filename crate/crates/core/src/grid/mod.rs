//! Single-bus system frequency response model.
//!
//! One equivalent synchronous machine with a transient-droop hydro governor
//! supplies a frequency-dependent load together with the wind farm:
//!
//! ```text
//! 2 H dΔf/dt = P_mech + P_wind − P_load − D Δf            (Δf in p.u.)
//!
//! gate command  y = g_ref + (1/R_p)(1 + s T_r)/(1 + s T_r R_t/R_p) · (−Δf)
//! gate servo    dg/dt = (y − g)/T_g,   g ∈ [g_min, g_max]
//! water column  P_turb = (1 − s T_w)/(1 + s T_w/2) · g
//! ```
//!
//! Governor quantities are on the machine base `s_sync_mva` and converted to
//! the system base `s_base_mva` at the swing equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tolerated frequency excursion before the run is aborted (Hz).
pub const MAX_DEVIATION_HZ: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorParams {
    /// Permanent droop R_p (p.u. on machine base).
    pub permanent_droop: f64,
    /// Transient droop R_t (p.u.).
    pub transient_droop: f64,
    /// Reset time T_r (s).
    pub reset_time: f64,
    /// Water starting time T_w (s).
    pub water_time: f64,
    /// Gate servo time constant T_g (s).
    pub gate_time: f64,
    pub gate_min: f64,
    pub gate_max: f64,
}

impl Default for GovernorParams {
    fn default() -> Self {
        Self {
            permanent_droop: 0.05,
            transient_droop: 0.202,
            reset_time: 0.937,
            water_time: 1.6,
            gate_time: 0.2,
            gate_min: 0.0,
            gate_max: 1.0,
        }
    }
}

/// Defaults for `h_sys`, `damping`, `p_load0` and the governor's transient
/// droop, reset time and water time come from the one-time calibration in
/// `examples/calibrate_grid.rs`; the remaining governor values are textbook
/// hydro values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    /// Nominal frequency (Hz).
    pub f_nom: f64,
    /// Equivalent inertia constant on the system base (s).
    pub h_sys: f64,
    /// Load damping (p.u. power per p.u. frequency).
    pub damping: f64,
    /// System base (MVA).
    pub s_base_mva: f64,
    /// Synchronous machine rating (MVA).
    pub s_sync_mva: f64,
    pub governor: GovernorParams,
    /// Pre-disturbance load (p.u. on the system base).
    pub p_load0: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            f_nom: 50.0,
            h_sys: 0.5,
            damping: 4.42,
            s_base_mva: 425.0,
            s_sync_mva: 200.0,
            governor: GovernorParams::default(),
            p_load0: 0.44,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        let g = &self.governor;
        for (name, v) in [
            ("f_nom", self.f_nom),
            ("h_sys", self.h_sys),
            ("s_base_mva", self.s_base_mva),
            ("s_sync_mva", self.s_sync_mva),
            ("governor.permanent_droop", g.permanent_droop),
            ("governor.transient_droop", g.transient_droop),
            ("governor.reset_time", g.reset_time),
            ("governor.water_time", g.water_time),
            ("governor.gate_time", g.gate_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.damping >= 0.0) {
            return Err(Error::invalid("damping must be non-negative"));
        }
        if !(g.gate_min < g.gate_max) {
            return Err(Error::invalid("governor gate_min must be below gate_max"));
        }
        Ok(())
    }

    fn machine_to_system(&self) -> f64 {
        self.s_sync_mva / self.s_base_mva
    }

    /// Steady-state frequency deviation (p.u.) after a sustained power
    /// imbalance `delta_p` (p.u. on system base, positive = extra load).
    pub fn steady_state_deviation(&self, delta_p: f64) -> f64 {
        -delta_p / (self.machine_to_system() / self.governor.permanent_droop + self.damping)
    }
}

/// Frequency and governor states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    /// System frequency (Hz).
    pub f: f64,
    /// Transient-droop compensator state (p.u. frequency).
    pub compensator: f64,
    /// Gate position (p.u. machine base).
    pub gate: f64,
    /// Water-column state; turbine power is `water − 2·gate`.
    pub water: f64,
    /// Governor load reference (p.u. machine base).
    pub gate_ref: f64,
    /// Mechanical power delivered to the system (p.u. system base).
    pub p_mech: f64,
}

impl GridState {
    /// Settled state at nominal frequency balancing `p_load - p_wind`.
    pub fn steady(params: &GridParams, p_wind: f64, p_load: f64) -> Result<Self> {
        let p_mech = p_load - p_wind;
        let gate = p_mech / params.machine_to_system();
        let g = &params.governor;
        if !(g.gate_min..=g.gate_max).contains(&gate) {
            return Err(Error::invalid(format!(
                "dispatch {gate:.4} p.u. for the synchronous machine is outside its gate range"
            )));
        }
        Ok(Self { f: params.f_nom, compensator: 0.0, gate, water: 3.0 * gate, gate_ref: gate, p_mech })
    }

    pub fn deviation_hz(&self, params: &GridParams) -> f64 {
        self.f - params.f_nom
    }
}

#[derive(Clone, Copy)]
struct X {
    df: f64,
    comp: f64,
    gate: f64,
    water: f64,
}

impl X {
    fn axpy(self, h: f64, d: X) -> X {
        X {
            df: self.df + h * d.df,
            comp: self.comp + h * d.comp,
            gate: self.gate + h * d.gate,
            water: self.water + h * d.water,
        }
    }
}

fn turbine_power(x: &X) -> f64 {
    x.water - 2.0 * x.gate
}

fn derivative(x: X, gate_ref: f64, p_wind: f64, p_load: f64, p: &GridParams) -> X {
    let g = &p.governor;
    let tau = g.reset_time * g.transient_droop / g.permanent_droop;
    let err = -x.df;
    let ratio = g.reset_time / tau;
    let command = gate_ref + (ratio * err + (1.0 - ratio) * x.comp) / g.permanent_droop;
    let mut dgate = (command - x.gate) / g.gate_time;
    if (x.gate >= g.gate_max && dgate > 0.0) || (x.gate <= g.gate_min && dgate < 0.0) {
        dgate = 0.0;
    }
    let p_mech = p.machine_to_system() * turbine_power(&x);
    X {
        df: (p_mech + p_wind - p_load - p.damping * x.df) / (2.0 * p.h_sys),
        comp: (err - x.comp) / tau,
        gate: dgate,
        water: (3.0 * x.gate - x.water) / (0.5 * g.water_time),
    }
}

/// One RK4 step with wind injection and load held over `dt` (both p.u. on
/// the system base).
pub fn grid_step(state: &GridState, p_wind: f64, p_load: f64, dt: f64, params: &GridParams) -> Result<GridState> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let x0 = X {
        df: (state.f - params.f_nom) / params.f_nom,
        comp: state.compensator,
        gate: state.gate,
        water: state.water,
    };
    let d = |x| derivative(x, state.gate_ref, p_wind, p_load, params);
    let k1 = d(x0);
    let k2 = d(x0.axpy(0.5 * dt, k1));
    let k3 = d(x0.axpy(0.5 * dt, k2));
    let k4 = d(x0.axpy(dt, k3));
    let comb = |a: f64, b: f64, c: f64, e: f64| dt / 6.0 * (a + 2.0 * b + 2.0 * c + e);
    let g = &params.governor;
    let x = X {
        df: x0.df + comb(k1.df, k2.df, k3.df, k4.df),
        comp: x0.comp + comb(k1.comp, k2.comp, k3.comp, k4.comp),
        gate: (x0.gate + comb(k1.gate, k2.gate, k3.gate, k4.gate)).clamp(g.gate_min, g.gate_max),
        water: x0.water + comb(k1.water, k2.water, k3.water, k4.water),
    };
    let dev_hz = x.df * params.f_nom;
    if !dev_hz.is_finite() || dev_hz.abs() > MAX_DEVIATION_HZ {
        return Err(Error::Divergence {
            time: f64::NAN,
            reason: format!("frequency deviation {dev_hz:.3} Hz exceeds {MAX_DEVIATION_HZ} Hz"),
        });
    }
    Ok(GridState {
        f: params.f_nom * (1.0 + x.df),
        compensator: x.comp,
        gate: x.gate,
        water: x.water,
        gate_ref: state.gate_ref,
        p_mech: params.machine_to_system() * turbine_power(&x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simulate(params: &GridParams, step: f64, seconds: f64, dt: f64) -> Vec<f64> {
        let p_wind = 0.3;
        let mut s = GridState::steady(params, p_wind, params.p_load0).unwrap();
        let n = (seconds / dt).round() as usize;
        let mut f = Vec::with_capacity(n);
        for k in 0..n {
            let load = if k as f64 * dt >= 0.5 { params.p_load0 + step } else { params.p_load0 };
            s = grid_step(&s, p_wind, load, dt, params).unwrap();
            f.push(s.f);
        }
        f
    }

    #[test]
    fn balanced_state_is_fixed_point() {
        let p = GridParams::default();
        let s = GridState::steady(&p, 0.3, p.p_load0).unwrap();
        let next = grid_step(&s, 0.3, p.p_load0, 0.01, &p).unwrap();
        assert_eq!(next.f, s.f);
        assert!((next.gate - s.gate).abs() < 1e-15);
        assert!((next.water - s.water).abs() < 1e-15);
        assert!((next.p_mech - s.p_mech).abs() < 1e-15);
    }

    #[test]
    fn steady_state_matches_droop_formula() {
        let p = GridParams::default();
        assert!(p.damping > 0.0);
        let step = 0.02;
        let f = simulate(&p, step, 300.0, 0.01);
        let expected = p.f_nom * (1.0 + p.steady_state_deviation(step));
        let last = *f.last().unwrap();
        assert!((last - expected).abs() < 1e-4, "{last} vs {expected}");
    }

    #[test]
    fn converges_without_limit_cycle() {
        let p = GridParams::default();
        let f = simulate(&p, 0.025, 200.0, 0.01);
        let n = f.len();
        // compare against one second earlier
        assert!((f[n - 1] - f[n - 101]).abs() < 1e-6);
    }

    #[test]
    fn larger_step_lower_nadir() {
        let p = GridParams::default();
        let nadirs: Vec<f64> = [0.005, 0.01, 0.02, 0.03, 0.04]
            .iter()
            .map(|&s| simulate(&p, s, 15.0, 0.01).into_iter().fold(f64::INFINITY, f64::min))
            .collect();
        for w in nadirs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn step_halving_converges_fourth_order() {
        let p = GridParams::default();
        let s0 = GridState::steady(&p, 0.3, p.p_load0).unwrap();
        let run = |dt: f64| {
            let mut s = s0;
            for _ in 0..(2.0 / dt).round() as usize {
                s = grid_step(&s, 0.3, p.p_load0 + 0.03, dt, &p).unwrap();
            }
            s.f
        };
        let (a, b, c) = (run(0.2), run(0.1), run(0.05));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 16.0).abs() < 0.3 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn divergence_detected() {
        let p = GridParams { h_sys: 0.1, ..GridParams::default() };
        let s = GridState::steady(&p, 0.3, p.p_load0).unwrap();
        let mut st = s;
        let mut failed = false;
        for _ in 0..1000 {
            match grid_step(&st, 0.3, p.p_load0 + 0.9, 0.01, &p) {
                Ok(n) => st = n,
                Err(e) => {
                    assert!(e.is_divergence());
                    failed = true;
                    break;
                }
            }
        }
        assert!(failed);
    }
}
