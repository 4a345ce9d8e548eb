use serde::{Deserialize, Serialize};

use super::WindDescriptor;
use crate::error::{Error, Result};
use crate::grid::GridParams;
use crate::mpc::MpcConfig;
use crate::turbine::TurbineParams;

/// Farm dispatch policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Every group follows its own MPPT reference; no frequency support.
    Mppt,
    /// MPPT plus an equal share of `−K_df·Δf` per group.
    Droop,
    /// Receding-horizon allocation of `−K_df·Δf` across groups.
    Mpc,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Mppt => "mppt",
            Policy::Droop => "droop",
            Policy::Mpc => "mpc",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mppt" => Ok(Policy::Mppt),
            "droop" | "local-droop" => Ok(Policy::Droop),
            "mpc" => Ok(Policy::Mpc),
            other => Err(Error::invalid(format!("unknown policy `{other}` (mppt, droop, mpc)"))),
        }
    }
}

/// Step increase of the system load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadStep {
    /// Event time (s).
    pub time: f64,
    /// Fractional increase of the base load.
    pub magnitude: f64,
}

impl Default for LoadStep {
    fn default() -> Self {
        Self { time: 0.5, magnitude: 0.05 }
    }
}

/// Observable family used for the controller's group models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Physics-informed five-dimensional observables.
    Sdmd,
    /// Rotor speed plus Gaussian radial basis functions.
    Edmd,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sdmd" => Ok(ModelKind::Sdmd),
            "edmd" | "rbf" => Ok(ModelKind::Edmd),
            other => Err(Error::invalid(format!("unknown model kind `{other}` (sdmd, edmd)"))),
        }
    }
}

/// Bounded pseudo-random steps of the power reference around MPPT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Excitation {
    /// Offsets are uniform in `[−amplitude, amplitude]` (p.u.).
    pub amplitude: f64,
    /// Dwell of each offset, uniform in `[dwell_min, dwell_max]` control steps.
    pub dwell_min: usize,
    pub dwell_max: usize,
}

impl Default for Excitation {
    fn default() -> Self {
        Self { amplitude: 0.1, dwell_min: 10, dwell_max: 30 }
    }
}

impl Excitation {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("excitation amplitude must be non-negative"));
        }
        if self.dwell_min == 0 || self.dwell_min > self.dwell_max {
            return Err(Error::invalid("excitation dwell range must satisfy 1 ≤ min ≤ max"));
        }
        Ok(())
    }
}

/// How the controller's group models are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub kind: ModelKind,
    /// Fixed α for the physics-informed observables; searched when absent.
    pub alpha: Option<f64>,
    pub rbf_centers: usize,
    pub rbf_seed: u64,
    /// Length of each group's training history (s).
    pub training_duration: f64,
    pub excitation: Excitation,
    /// Open-loop horizon and start stride of the α search (control steps).
    pub selection_horizon: usize,
    pub selection_stride: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            kind: ModelKind::Sdmd,
            alpha: None,
            rbf_centers: 100,
            rbf_seed: 1,
            training_duration: 600.0,
            excitation: Excitation::default(),
            selection_horizon: 100,
            selection_stride: 10,
        }
    }
}

/// A closed-loop frequency-response experiment.
///
/// The scenario's `k_df` and `control_step` override the corresponding
/// fields of `mpc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub winds: Vec<WindDescriptor>,
    pub load_step: LoadStep,
    /// Speed-droop ratio (p.u./Hz).
    pub k_df: f64,
    /// Simulated time (s).
    pub duration: f64,
    /// Plant integration step (s).
    pub dt: f64,
    /// Control step (s).
    pub control_step: f64,
    pub policy: Policy,
    pub seed: u64,
    pub turbine: TurbineParams,
    pub grid: GridParams,
    pub mpc: MpcConfig,
    pub models: ModelSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            winds: [8.0, 9.0, 10.0].into_iter().map(WindDescriptor::fixed).collect(),
            load_step: LoadStep::default(),
            k_df: 0.2,
            duration: 10.0,
            dt: 0.01,
            control_step: 0.1,
            policy: Policy::Mppt,
            seed: 1,
            turbine: TurbineParams::default(),
            grid: GridParams::default(),
            mpc: MpcConfig::default(),
            models: ModelSettings::default(),
        }
    }
}

impl Scenario {
    pub fn with_policy(mut self, policy: Policy, k_df: f64) -> Self {
        self.policy = policy;
        self.k_df = k_df;
        self
    }

    /// Plant steps per control step.
    pub fn substeps(&self) -> usize {
        (self.control_step / self.dt).round() as usize
    }

    /// Control steps in the run.
    pub fn control_steps(&self) -> usize {
        (self.duration / self.control_step).round() as usize
    }

    /// The MPC settings actually used by the run.
    pub fn effective_mpc(&self) -> MpcConfig {
        MpcConfig { k_df: self.k_df, control_step: self.control_step, ..self.mpc.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.winds.is_empty() {
            return Err(Error::invalid("scenario needs at least one turbine group"));
        }
        for w in &self.winds {
            w.validate()?;
        }
        if !(self.dt > 0.0 && self.control_step > 0.0 && self.duration > 0.0) {
            return Err(Error::invalid("dt, control_step and duration must be positive"));
        }
        let ratio = self.control_step / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "plant step {} must divide the control step {}",
                self.dt, self.control_step
            )));
        }
        let steps = self.duration / self.control_step;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::invalid("duration must be a whole number of control steps"));
        }
        if !(self.load_step.time >= 0.0 && self.load_step.time <= self.duration) {
            return Err(Error::invalid("load step must occur within the run"));
        }
        if !(self.k_df >= 0.0 && self.k_df.is_finite()) {
            return Err(Error::invalid("k_df must be non-negative"));
        }
        if !self.load_step.magnitude.is_finite() {
            return Err(Error::invalid("load step magnitude must be finite"));
        }
        if !(self.models.training_duration >= self.control_step * 2.0) {
            return Err(Error::invalid("training history must span at least two control steps"));
        }
        if self.models.rbf_centers < 2 {
            return Err(Error::invalid("at least two RBF centers are required"));
        }
        if let Some(a) = self.models.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid("alpha must be positive"));
            }
        }
        self.models.excitation.validate()?;
        self.turbine.validate()?;
        self.grid.validate()?;
        self.effective_mpc().validate()
    }
}
