use std::path::Path;

use serde::{Deserialize, Serialize};
use windfreq_core::experiments::{Excitation, IdentificationConfig, Scenario};

use crate::error::{CliError, CliResult};

/// Open-loop plant run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Simulated time (s).
    pub duration: f64,
    /// Random power offsets around MPPT; `amplitude = 0` gives pure MPPT.
    pub excitation: Excitation,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { duration: 60.0, excitation: Excitation::default() }
    }
}

/// Everything a run depends on. Saved next to the outputs so that
/// `--config <out>/config.toml` reproduces the run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Closed-loop scenario; also supplies the turbine, wind and model
    /// settings of `simulate` and `identify`.
    pub scenario: Scenario,
    pub identification: IdentificationConfig,
    pub simulate: SimulateConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ConfigRead { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|source| CliError::ConfigParse { path: path.to_path_buf(), source })
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.identification.seed = seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("[scenario]\nk_df = 0.3\n[scenario.grid]\nh_sys = 2.0\n").unwrap();
        assert_eq!(cfg.scenario.k_df, 0.3);
        assert_eq!(cfg.scenario.grid.h_sys, 2.0);
        assert_eq!(cfg.scenario.duration, Scenario::default().duration);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[scenario]\nkdf = 0.3\n").is_err());
    }
}
