use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    derive_seed, gen_wind, nadir, rotor_speed_distortion, turbine_training_trajectory, MetricsReport, ModelKind,
    Policy, Scenario, SolverStats, Stream,
};
use crate::error::{Error, Result};
use crate::grid::{grid_step, GridState};
use crate::koopman::{
    alpha_from_cp, alpha_grid, collect_snapshots, fit_model, select_alpha, LiftedModel, ObservableMap, RbfDictionary,
    Trajectory,
};
use crate::mpc::{
    droop_reference, kkt_residuals, DispatchLog, DispatchRecord, MpcController, QpProblem, QpSolution, SolveStatus,
};
use crate::turbine::{mppt_equilibrium, mppt_reference, turbine_step, ControlInput, TurbineState};

/// Plant-rate time series of a closed-loop run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    /// System frequency (Hz).
    pub f: Vec<f64>,
    /// Farm active power (MW).
    pub p_farm_mw: Vec<f64>,
    /// Per group, per sample.
    pub omega_r: Vec<Vec<f64>>,
    pub p_ref: Vec<Vec<f64>>,
    pub v_w: Vec<Vec<f64>>,
}

impl TimeSeries {
    fn new(groups: usize, capacity: usize) -> Self {
        let per = || vec![Vec::with_capacity(capacity); groups];
        Self {
            t: Vec::with_capacity(capacity),
            f: Vec::with_capacity(capacity),
            p_farm_mw: Vec::with_capacity(capacity),
            omega_r: per(),
            p_ref: per(),
            v_w: per(),
        }
    }

    pub fn groups(&self) -> usize {
        self.omega_r.len()
    }

    /// Columns `t, f, p_farm_mw, omega_r_i…, p_ref_i…, v_w_i…`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let m = self.groups();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "f".to_string(), "p_farm_mw".to_string()];
        for name in ["omega_r", "p_ref", "v_w"] {
            header.extend((1..=m).map(|i| format!("{name}_{i}")));
        }
        out.write_record(&header)?;
        for k in 0..self.t.len() {
            let mut row = vec![self.t[k].to_string(), self.f[k].to_string(), self.p_farm_mw[k].to_string()];
            for block in [&self.omega_r, &self.p_ref, &self.v_w] {
                row.extend(block.iter().map(|s| s[k].to_string()));
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a series written by [`TimeSeries::write_csv`].
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let m = headers.iter().filter(|h| h.starts_with("omega_r_")).count();
        if headers.len() != 3 + 3 * m || m == 0 {
            return Err(Error::Dimension(format!("unexpected time-series header {headers:?}")));
        }
        let mut ts = TimeSeries::new(m, 0);
        for rec in rdr.records() {
            let rec = rec?;
            let val = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| Error::invalid(format!("bad number `{}` in time series", &rec[i])))
            };
            ts.t.push(val(0)?);
            ts.f.push(val(1)?);
            ts.p_farm_mw.push(val(2)?);
            for i in 0..m {
                ts.omega_r[i].push(val(3 + i)?);
                ts.p_ref[i].push(val(3 + m + i)?);
                ts.v_w[i].push(val(3 + 2 * m + i)?);
            }
        }
        Ok(ts)
    }
}

/// Everything produced by one closed-loop run.
#[derive(Debug, Clone)]
pub struct FrequencyRun {
    pub report: MetricsReport,
    pub series: TimeSeries,
    pub dispatch: DispatchLog,
    /// Group models used by the controller (empty for model-free policies).
    pub models: Vec<LiftedModel>,
    /// Closed-loop wall time, excluding model training.
    pub loop_time: Duration,
    /// Wall time spent generating histories and fitting models.
    pub training_time: Duration,
}

/// Callback receiving the time, the assembled QP and its solution.
pub type QpObserver<'a> = &'a mut dyn FnMut(f64, &QpProblem, &QpSolution);

/// Optional inputs of a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Pre-fitted group models; trained from the scenario when absent.
    pub models: Option<Vec<LiftedModel>>,
    /// Called with every QP assembled and its solution.
    pub observer: Option<QpObserver<'a>>,
}

fn with_time(e: Error, time: f64) -> Error {
    match e {
        Error::Divergence { reason, .. } => Error::Divergence { time, reason },
        other => other,
    }
}

/// Generates each group's training history under the scenario's wind class
/// (independent seeds) and fits its model.
pub fn train_group_models(scenario: &Scenario) -> Result<(Vec<LiftedModel>, Vec<Trajectory>)> {
    let settings = &scenario.models;
    let p = &scenario.turbine;
    let mut models = Vec::with_capacity(scenario.winds.len());
    let mut histories = Vec::with_capacity(scenario.winds.len());
    for (i, desc) in scenario.winds.iter().enumerate() {
        let train_desc = super::WindDescriptor { seed: None, ..*desc };
        let wind_seed = derive_seed(desc.seed.unwrap_or(scenario.seed), Stream::TrainingWind, i as u64);
        let wind = gen_wind(&train_desc, settings.training_duration, scenario.control_step, wind_seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, Stream::Excitation, i as u64));
        let history = turbine_training_trajectory(
            &wind,
            p,
            scenario.control_step,
            scenario.substeps(),
            &settings.excitation,
            &mut rng,
        )?;
        let model = match settings.kind {
            ModelKind::Sdmd => match settings.alpha {
                Some(alpha) => fit_model(&collect_snapshots(&history, &ObservableMap::sdmd(alpha)?)?)?,
                None => {
                    select_alpha(
                        &history,
                        &alpha_grid(alpha_from_cp(p)),
                        settings.selection_horizon,
                        settings.selection_stride,
                    )?
                    .model
                }
            },
            ModelKind::Edmd => {
                let dict = RbfDictionary::for_turbine(settings.rbf_centers, p, settings.rbf_seed)?;
                fit_model(&collect_snapshots(&history, &ObservableMap::Rbf(dict))?)?
            }
        };
        models.push(model);
        histories.push(history);
    }
    Ok((models, histories))
}

/// Runs the closed loop of turbines, grid and dispatch policy.
pub fn run_frequency_experiment(scenario: &Scenario, mut options: RunOptions<'_>) -> Result<FrequencyRun> {
    scenario.validate()?;
    let m = scenario.winds.len();
    let tp = &scenario.turbine;
    let gp = &scenario.grid;
    let ts = scenario.control_step;
    let dt = scenario.dt;
    let nsub = scenario.substeps();
    let steps = scenario.control_steps();
    let group_to_system = tp.group_rating_mw() / gp.s_base_mva;

    // wind at control-step resolution, held over each step
    let winds: Vec<Vec<f64>> = scenario
        .winds
        .iter()
        .enumerate()
        .map(|(i, d)| gen_wind(d, scenario.duration, ts, derive_seed(scenario.seed, Stream::Wind, i as u64)))
        .collect::<Result<_>>()?;

    let training_start = Instant::now();
    let mut controller = None;
    let mut models = Vec::new();
    if scenario.policy == Policy::Mpc {
        let (fitted, histories) = match options.models.take() {
            Some(given) => {
                if given.len() != m {
                    return Err(Error::Dimension(format!("{} models supplied for {m} groups", given.len())));
                }
                (given, Vec::new())
            }
            None => train_group_models(scenario)?,
        };
        let mut c = MpcController::new(fitted.clone(), scenario.effective_mpc())?;
        if !histories.is_empty() {
            c = c.with_history(&histories)?;
        }
        models = fitted;
        controller = Some(c);
    }
    let training_time = training_start.elapsed();
    let loop_start = Instant::now();

    let mut states: Vec<TurbineState> = winds.iter().map(|w| mppt_equilibrium(w[0], tp)).collect::<Result<_>>()?;
    let p_init: Vec<f64> = states.iter().map(|s| mppt_reference(s.omega_r, tp)).collect();
    let p_load0 = gp.p_load0;
    let mut grid = GridState::steady(gp, p_init.iter().sum::<f64>() * group_to_system, p_load0)?;

    let mut series = TimeSeries::new(m, steps * nsub + 1);
    let mut dispatch = DispatchLog::default();
    let mut omega_ctrl: Vec<Vec<f64>> = states.iter().map(|s| vec![s.omega_r]).collect();
    let mut stats = SolverStats::default();
    let mut energy_dev = 0.0;
    let mut droop_residual: f64 = 0.0;
    let shares = vec![1.0 / m as f64; m];
    let mut p_ref = p_init.clone();

    let record = |series: &mut TimeSeries, t: f64, f: f64, states: &[TurbineState], p: &[f64], v: &[f64]| {
        series.t.push(t);
        series.f.push(f);
        series.p_farm_mw.push(p.iter().sum::<f64>() * tp.group_rating_mw());
        for i in 0..states.len() {
            series.omega_r[i].push(states[i].omega_r);
            series.p_ref[i].push(p[i]);
            series.v_w[i].push(v[i]);
        }
    };
    let v0: Vec<f64> = winds.iter().map(|w| w[0]).collect();
    record(&mut series, 0.0, grid.f, &states, &p_ref, &v0);

    for k in 0..steps {
        let t = k as f64 * ts;
        let v: Vec<f64> = winds.iter().map(|w| w[k]).collect();
        let delta_f = grid.deviation_hz(gp);
        let p_mppt: Vec<f64> = states.iter().map(|s| mppt_reference(s.omega_r, tp)).collect();
        let (status, iterations, fallback) = match scenario.policy {
            Policy::Mppt => {
                p_ref.clone_from(&p_mppt);
                ("mppt".to_string(), 0, false)
            }
            Policy::Droop => {
                p_ref = droop_reference(&p_mppt, delta_f, &shares, scenario.k_df, (tp.p_min, tp.p_max))?;
                ("droop".to_string(), 0, false)
            }
            Policy::Mpc => {
                let c = controller.as_mut().expect("controller built for MPC policy");
                let meas: Vec<(f64, f64)> = states.iter().zip(&v).map(|(s, &v)| (s.omega_r, v)).collect();
                let d = c.decide(&meas, delta_f)?;
                stats.solves += 1;
                stats.max_iterations = stats.max_iterations.max(d.iterations);
                stats.mean_iterations += d.iterations as f64;
                if d.fallback {
                    stats.fallbacks += 1;
                }
                if let (Some(prob), Some(sol)) = (&d.problem, &d.solution) {
                    if sol.status == SolveStatus::Optimal {
                        stats.optimal += 1;
                        stats.polished += usize::from(sol.polished);
                        stats.max_kkt_residual = stats.max_kkt_residual.max(kkt_residuals(prob, sol).max());
                    }
                    if let Some(obs) = options.observer.as_mut() {
                        obs(t, prob, sol);
                    }
                }
                p_ref.clone_from(&d.p_ref);
                (d.status.as_str().to_string(), d.iterations, d.fallback)
            }
        };
        let deviation: f64 = p_ref.iter().zip(&p_mppt).map(|(p, q)| p - q).sum();
        energy_dev += deviation * ts;
        if scenario.policy != Policy::Mppt {
            droop_residual = droop_residual.max((deviation + scenario.k_df * delta_f).abs());
        }
        dispatch.push(DispatchRecord { time: t, delta_f, p_ref: p_ref.clone(), status, iterations, fallback });

        let p_wind = p_ref.iter().sum::<f64>() * group_to_system;
        for s in 0..nsub {
            let idx = k * nsub + s;
            let t_sub = idx as f64 * dt;
            let p_load = if t_sub >= scenario.load_step.time - 1e-9 {
                p_load0 * (1.0 + scenario.load_step.magnitude)
            } else {
                p_load0
            };
            grid = grid_step(&grid, p_wind, p_load, dt, gp).map_err(|e| with_time(e, t_sub))?;
            for i in 0..m {
                let u = ControlInput::new(p_ref[i], v[i]);
                states[i] = turbine_step(&states[i], &u, dt, tp).map_err(|e| with_time(e, t_sub))?;
            }
            record(&mut series, (idx + 1) as f64 * dt, grid.f, &states, &p_ref, &v);
        }
        for i in 0..m {
            omega_ctrl[i].push(states[i].omega_r);
        }
        if let Some(c) = controller.as_mut() {
            for i in 0..m {
                c.record(i, omega_ctrl[i][k], ControlInput::new(p_ref[i], v[i]));
            }
        }
    }
    let loop_time = loop_start.elapsed();

    if stats.solves > 0 {
        stats.mean_iterations /= stats.solves as f64;
    }
    let (nadir_idx, nadir_hz) = nadir(&series.f).expect("series is non-empty");
    let report = MetricsReport {
        policy: scenario.policy,
        k_df: scenario.k_df,
        gamma: rotor_speed_distortion(&omega_ctrl, ts)?,
        nadir_hz,
        nadir_time_s: series.t[nadir_idx],
        final_frequency_hz: *series.f.last().expect("series is non-empty"),
        farm_energy_deviation: energy_dev,
        omega_min: omega_ctrl.iter().map(|s| s.iter().cloned().fold(f64::INFINITY, f64::min)).collect(),
        omega_max: omega_ctrl.iter().map(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect(),
        max_droop_residual: droop_residual,
        solver: (scenario.policy == Policy::Mpc).then_some(stats),
        model_alpha: models
            .iter()
            .map(|md| match md.map {
                ObservableMap::Sdmd { alpha } => alpha,
                ObservableMap::Rbf(_) => 0.0,
            })
            .collect(),
    };
    Ok(FrequencyRun { report, series, dispatch, models, loop_time, training_time })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(policy: Policy) -> Scenario {
        Scenario { duration: 2.0, ..Scenario::default() }.with_policy(policy, 0.2)
    }

    #[test]
    fn mppt_has_no_deviation() {
        let run = run_frequency_experiment(&short(Policy::Mppt), RunOptions::default()).unwrap();
        assert_eq!(run.report.farm_energy_deviation, 0.0);
        assert!(run.report.nadir_hz < 50.0);
        assert_eq!(run.series.t.len(), 201);
        assert_eq!(run.dispatch.records.len(), 20);
    }

    #[test]
    fn droop_accounting_is_exact() {
        let run = run_frequency_experiment(&short(Policy::Droop), RunOptions::default()).unwrap();
        assert!(run.report.max_droop_residual < 1e-12);
    }

    #[test]
    fn droop_lifts_nadir() {
        let a = run_frequency_experiment(&short(Policy::Mppt), RunOptions::default()).unwrap();
        let b = run_frequency_experiment(&short(Policy::Droop), RunOptions::default()).unwrap();
        assert!(b.report.nadir_hz > a.report.nadir_hz);
    }

    #[test]
    fn csv_round_trip() {
        let run = run_frequency_experiment(&short(Policy::Droop), RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        run.series.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(&buf[..]).unwrap();
        assert_eq!(back, run.series);
    }
}
