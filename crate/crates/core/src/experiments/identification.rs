use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    derive_seed, excited_trajectory, gen_wind, turbine_training_trajectory, Excitation, Stream, WindDescriptor,
};
use crate::error::{Error, Result};
use crate::koopman::{
    alpha_from_cp, alpha_grid, collect_snapshots, fit_model, select_alpha, LiftedModel, ObservableMap, RbfDictionary,
    Trajectory,
};
use crate::turbine::TurbineParams;

/// Plant used to generate identification data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantKind {
    /// The full turbine model.
    Turbine,
    /// `ω_{k+1} = 0.98 ω_k − 0.02 P_k + 0.003 v_k`, exactly linear in the
    /// rotor speed and inputs that both observable sets contain.
    LinearSurrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentificationConfig {
    pub scenarios: usize,
    /// Prediction horizon (control steps).
    pub horizon: usize,
    /// Training history length (s).
    pub training_duration: f64,
    /// Held-out continuation length (s).
    pub test_duration: f64,
    pub control_step: f64,
    pub dt: f64,
    pub wind: WindDescriptor,
    pub seed: u64,
    pub rbf_centers: usize,
    pub rbf_seed: u64,
    /// Fixed α for the physics-informed observables; searched when absent.
    pub alpha: Option<f64>,
    pub selection_horizon: usize,
    pub selection_stride: usize,
    /// Stride between forecast start points on the held-out data.
    pub eval_stride: usize,
    pub excitation: Excitation,
    pub plant: PlantKind,
    pub turbine: TurbineParams,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            scenarios: 100,
            horizon: 100,
            training_duration: 600.0,
            test_duration: 120.0,
            control_step: 0.1,
            dt: 0.01,
            wind: WindDescriptor::weibull(),
            seed: 1,
            rbf_centers: 100,
            rbf_seed: 1,
            alpha: None,
            selection_horizon: 100,
            selection_stride: 10,
            eval_stride: 10,
            excitation: Excitation::default(),
            plant: PlantKind::Turbine,
            turbine: TurbineParams::default(),
        }
    }
}

impl IdentificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios == 0 || self.horizon == 0 {
            return Err(Error::invalid("scenario count and horizon must be positive"));
        }
        if !(self.control_step > 0.0 && self.dt > 0.0) {
            return Err(Error::invalid("time steps must be positive"));
        }
        let ratio = self.control_step / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 - 1e-9 {
            return Err(Error::invalid("plant step must divide the control step"));
        }
        let test_steps = (self.test_duration / self.control_step).round() as usize;
        if test_steps <= self.horizon {
            return Err(Error::invalid("held-out data must be longer than the horizon"));
        }
        if self.training_duration < self.control_step * 2.0 {
            return Err(Error::invalid("training history is too short"));
        }
        self.wind.validate()?;
        self.excitation.validate()?;
        self.turbine.validate()
    }

    fn substeps(&self) -> usize {
        (self.control_step / self.dt).round() as usize
    }
}

/// Per-scenario outcome. Wall times are measurements, not part of the
/// deterministic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub index: usize,
    /// Sample mean of the scenario's wind (m/s).
    pub mean_wind: f64,
    pub alpha: f64,
    pub sdmd_rmse: f64,
    pub edmd_rmse: f64,
    pub sdmd_fit_s: f64,
    pub edmd_fit_s: f64,
    pub sdmd_predict_s: f64,
    pub edmd_predict_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub results: Vec<ScenarioResult>,
    pub sdmd_dim: usize,
    pub edmd_dim: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl IdentificationReport {
    pub fn sdmd_median_rmse(&self) -> f64 {
        median(&mut self.results.iter().map(|r| r.sdmd_rmse).collect::<Vec<_>>())
    }

    pub fn edmd_median_rmse(&self) -> f64 {
        median(&mut self.results.iter().map(|r| r.edmd_rmse).collect::<Vec<_>>())
    }

    /// Scenarios where the physics-informed fit was not faster.
    pub fn slower_fits(&self) -> usize {
        self.results.iter().filter(|r| r.sdmd_fit_s >= r.edmd_fit_s).count()
    }

    pub fn total_fit_time(&self) -> (f64, f64) {
        self.results.iter().fold((0.0, 0.0), |(a, b), r| (a + r.sdmd_fit_s, b + r.edmd_fit_s))
    }

    /// Deterministic per-scenario accuracy table.
    pub fn write_accuracy_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario", "mean_wind", "alpha", "sdmd_rmse", "edmd_rmse"])?;
        for r in &self.results {
            out.write_record([
                r.index.to_string(),
                r.mean_wind.to_string(),
                r.alpha.to_string(),
                r.sdmd_rmse.to_string(),
                r.edmd_rmse.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Wall-time measurements (vary between runs).
    pub fn write_timing_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario", "sdmd_fit_s", "edmd_fit_s", "sdmd_predict_s", "edmd_predict_s"])?;
        for r in &self.results {
            out.write_record([
                r.index.to_string(),
                format!("{:.6e}", r.sdmd_fit_s),
                format!("{:.6e}", r.edmd_fit_s),
                format!("{:.6e}", r.sdmd_predict_s),
                format!("{:.6e}", r.edmd_predict_s),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let (ts, te) = self.total_fit_time();
        format!(
            "scenarios = {}\nsdmd_dim = {}\nedmd_dim = {}\nsdmd_median_rmse = {:.6e}\nedmd_median_rmse = {:.6e}\nrmse_ratio = {:.4}\nsdmd_total_fit_s = {:.4}\nedmd_total_fit_s = {:.4}\nscenarios_sdmd_fit_not_faster = {}\n",
            self.results.len(),
            self.sdmd_dim,
            self.edmd_dim,
            self.sdmd_median_rmse(),
            self.edmd_median_rmse(),
            self.sdmd_median_rmse() / self.edmd_median_rmse(),
            ts,
            te,
            self.slower_fits()
        )
    }
}

fn scenario_trajectory(config: &IdentificationConfig, index: usize) -> Result<Trajectory> {
    let total = config.training_duration + config.test_duration;
    let wind =
        gen_wind(&config.wind, total, config.control_step, derive_seed(config.seed, Stream::Wind, index as u64))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, Stream::Excitation, index as u64));
    let p = &config.turbine;
    match config.plant {
        PlantKind::Turbine => {
            turbine_training_trajectory(&wind, p, config.control_step, config.substeps(), &config.excitation, &mut rng)
        }
        PlantKind::LinearSurrogate => excited_trajectory(&wind, 1.0, p, &config.excitation, &mut rng, |_, w, u| {
            Ok(0.98 * w - 0.02 * u.p_ref + 0.003 * u.v_w)
        }),
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Fits both observable sets on each scenario's training history and scores
/// open-loop forecasts on its held-out continuation. The fit time of the
/// physics-informed model includes its α search.
pub fn run_identification_comparison(config: &IdentificationConfig) -> Result<IdentificationReport> {
    config.validate()?;
    let n_train = (config.training_duration / config.control_step).round() as usize + 1;
    let dict = RbfDictionary::for_turbine(config.rbf_centers, &config.turbine, config.rbf_seed)?;
    let rbf_map = ObservableMap::Rbf(dict);
    let mut results = Vec::with_capacity(config.scenarios);
    for index in 0..config.scenarios {
        let traj = scenario_trajectory(config, index)?;
        let train = traj.slice(0..n_train);
        let test = traj.slice(n_train - 1..traj.len());
        let mean_wind = traj.inputs.iter().map(|u| u.v_w).sum::<f64>() / traj.len() as f64;

        let (sdmd, sdmd_fit_s): (LiftedModel, f64) = timed(|| match config.alpha {
            Some(a) => fit_model(&collect_snapshots(&train, &ObservableMap::sdmd(a)?)?),
            None => Ok(select_alpha(
                &train,
                &alpha_grid(alpha_from_cp(&config.turbine)),
                config.selection_horizon,
                config.selection_stride,
            )?
            .model),
        })?;
        let (edmd, edmd_fit_s) = timed(|| fit_model(&collect_snapshots(&train, &rbf_map)?))?;
        let (sdmd_rmse, sdmd_predict_s) = timed(|| sdmd.prediction_rmse(&test, config.horizon, config.eval_stride))?;
        let (edmd_rmse, edmd_predict_s) = timed(|| edmd.prediction_rmse(&test, config.horizon, config.eval_stride))?;
        let alpha = match sdmd.map {
            ObservableMap::Sdmd { alpha } => alpha,
            ObservableMap::Rbf(_) => unreachable!("physics-informed model"),
        };
        log::debug!(
            "scenario {index}: v̄ = {mean_wind:.2}, α = {alpha:.4}, rmse {sdmd_rmse:.3e} / {edmd_rmse:.3e}, fit {sdmd_fit_s:.4}s / {edmd_fit_s:.4}s"
        );
        results.push(ScenarioResult {
            index,
            mean_wind,
            alpha,
            sdmd_rmse,
            edmd_rmse,
            sdmd_fit_s,
            edmd_fit_s,
            sdmd_predict_s,
            edmd_predict_s,
        });
    }
    Ok(IdentificationReport { results, sdmd_dim: crate::koopman::SDMD_DIM, edmd_dim: rbf_map.dim() })
}
