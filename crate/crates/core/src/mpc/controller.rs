use std::io::Write;

use nalgebra::DVector;

use super::{build_qp, droop_reference, solve_qp, MpcConfig, QpProblem, QpSolution, SolveStatus, WarmStart};
use crate::error::{Error, Result};
use crate::koopman::{update_model, LiftedModel, SlidingWindow, Trajectory};
use crate::turbine::ControlInput;

/// Outcome of one receding-horizon decision.
#[derive(Debug, Clone)]
pub struct MpcDecision {
    /// First-step reference per group.
    pub p_ref: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    /// True when the solver did not return an optimal point and the local
    /// droop allocation was dispatched instead.
    pub fallback: bool,
    pub problem: Option<QpProblem>,
    pub solution: Option<QpSolution>,
}

fn equal_shares(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Builds and solves the QP for measured `(ω_r, v_w)` per group under a
/// persistence wind forecast and returns the first-step references.
///
/// Solver failures are not errors: the local-droop references are returned
/// with `fallback` set. Only malformed input fails.
pub fn mpc_step(
    models: &[LiftedModel],
    measurements: &[(f64, f64)],
    delta_f: f64,
    config: &MpcConfig,
    warm: Option<&WarmStart>,
) -> Result<MpcDecision> {
    let m = models.len();
    if measurements.len() != m {
        return Err(Error::Dimension(format!("{m} models but {} measurements", measurements.len())));
    }
    let p_mppt: Vec<f64> = measurements.iter().map(|&(w, _)| config.mppt(w)).collect();
    let init: Vec<(f64, ControlInput)> =
        measurements.iter().zip(&p_mppt).map(|(&(w, v), &p)| (w, ControlInput::new(p, v))).collect();
    let forecast: Vec<Vec<f64>> = measurements.iter().map(|&(_, v)| vec![v; config.horizon]).collect();
    let fallback = |status, iterations, problem, solution| -> Result<MpcDecision> {
        let p_ref = droop_reference(&p_mppt, delta_f, &equal_shares(m), config.k_df, (config.p_min, config.p_max))?;
        Ok(MpcDecision { p_ref, status, iterations, fallback: true, problem, solution })
    };

    let problem = match build_qp(models, &init, &forecast, delta_f, &p_mppt, config) {
        Ok(p) => p,
        Err(e @ (Error::Dimension(_) | Error::InvalidParameter(_))) => return Err(e),
        Err(e) => {
            log::warn!("MPC problem could not be assembled ({e}); using droop");
            return fallback(SolveStatus::Infeasible, 0, None, None);
        }
    };
    let solution = solve_qp(&problem, &config.solver, warm)?;
    if solution.status != SolveStatus::Optimal {
        log::debug!("MPC solve ended {}; using droop", solution.status);
        return fallback(solution.status, solution.iterations, Some(problem), Some(solution));
    }
    let t = config.horizon;
    let p_ref = (0..m).map(|i| solution.x[i * t].clamp(config.p_min, config.p_max)).collect();
    Ok(MpcDecision {
        p_ref,
        status: solution.status,
        iterations: solution.iterations,
        fallback: false,
        problem: Some(problem),
        solution: Some(solution),
    })
}

/// Shifts a horizon-major plan one step forward, repeating the last entry.
fn shift_blocks(v: &DVector<f64>, block: usize) -> DVector<f64> {
    if block == 0 || !v.len().is_multiple_of(block) {
        return v.clone();
    }
    let mut out = v.clone();
    for b in 0..v.len() / block {
        let off = b * block;
        for k in 0..block - 1 {
            out[off + k] = v[off + k + 1];
        }
    }
    out
}

/// Receding-horizon controller with warm starts and periodic model refits.
#[derive(Debug, Clone)]
pub struct MpcController {
    config: MpcConfig,
    models: Vec<LiftedModel>,
    windows: Vec<SlidingWindow>,
    warm: Option<WarmStart>,
    steps: usize,
    refits: usize,
}

impl MpcController {
    pub fn new(models: Vec<LiftedModel>, config: MpcConfig) -> Result<Self> {
        config.validate()?;
        if models.is_empty() {
            return Err(Error::invalid("controller needs at least one group model"));
        }
        let windows = models.iter().map(|_| SlidingWindow::new(config.window)).collect();
        Ok(Self { config, models, windows, warm: None, steps: 0, refits: 0 })
    }

    /// Seeds each group's refit window with its recent history.
    pub fn with_history(mut self, histories: &[Trajectory]) -> Result<Self> {
        if histories.len() != self.models.len() {
            return Err(Error::Dimension("one history per group is required".into()));
        }
        for (w, h) in self.windows.iter_mut().zip(histories) {
            w.extend(h);
        }
        Ok(self)
    }

    pub fn config(&self) -> &MpcConfig {
        &self.config
    }

    pub fn models(&self) -> &[LiftedModel] {
        &self.models
    }

    /// Number of completed model refreshes.
    pub fn refits(&self) -> usize {
        self.refits
    }

    /// Appends the sample applied to `group` over the last control step.
    pub fn record(&mut self, group: usize, omega_r: f64, u: ControlInput) {
        if let Some(w) = self.windows.get_mut(group) {
            w.push(omega_r, u);
        }
    }

    fn refresh(&mut self) {
        for (model, window) in self.models.iter_mut().zip(&self.windows) {
            if window.len() < 2 {
                continue;
            }
            match window.snapshots(&model.map).and_then(|s| update_model(model, &s)) {
                Ok(m) => *model = m,
                Err(e) => log::warn!("model refresh skipped: {e}"),
            }
        }
        self.refits += 1;
    }

    /// One control decision from measured `(ω_r, v_w)` per group and the
    /// frequency deviation in Hz.
    pub fn decide(&mut self, measurements: &[(f64, f64)], delta_f: f64) -> Result<MpcDecision> {
        if self.steps > 0 && self.config.refresh_interval > 0 && self.steps.is_multiple_of(self.config.refresh_interval)
        {
            self.refresh();
        }
        self.steps += 1;
        let decision = mpc_step(&self.models, measurements, delta_f, &self.config, self.warm.as_ref())?;
        self.warm = match (&decision.solution, decision.fallback) {
            (Some(s), false) => {
                let t = self.config.horizon;
                Some(WarmStart {
                    x: shift_blocks(&s.x, t),
                    y_eq: shift_blocks(&s.y_eq, t),
                    y_in: shift_blocks(&s.y_in, t),
                    y_box: shift_blocks(&s.y_box, t),
                })
            }
            _ => None,
        };
        Ok(decision)
    }
}

/// One row of the dispatch log.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRecord {
    pub time: f64,
    pub delta_f: f64,
    pub p_ref: Vec<f64>,
    pub status: String,
    pub iterations: usize,
    pub fallback: bool,
}

/// Per-step dispatch log, written as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DispatchLog {
    pub records: Vec<DispatchRecord>,
}

impl DispatchLog {
    pub fn push(&mut self, record: DispatchRecord) {
        self.records.push(record);
    }

    pub fn fallbacks(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let groups = self.records.first().map_or(0, |r| r.p_ref.len());
        let mut header = vec!["t".to_string(), "delta_f".to_string()];
        header.extend((1..=groups).map(|i| format!("p_ref_{i}")));
        header.extend(["status", "iterations", "fallback"].map(String::from));
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.time.to_string(), r.delta_f.to_string()];
            row.extend(r.p_ref.iter().map(f64::to_string));
            row.push(r.status.clone());
            row.push(r.iterations.to_string());
            row.push(u8::from(r.fallback).to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koopman::ObservableMap;
    use crate::mpc::kkt_residuals;
    use nalgebra::DMatrix;

    fn toy_model() -> LiftedModel {
        let mut a = DMatrix::identity(5, 5) * 0.5;
        a[(0, 0)] = 0.98;
        let mut b = DMatrix::zeros(5, 2);
        b[(0, 0)] = -0.01;
        b[(0, 1)] = 0.0028;
        LiftedModel { a, b, map: ObservableMap::sdmd(0.3).unwrap(), fit_residual: 0.0 }
    }

    #[test]
    fn single_group_follows_droop_exactly() {
        let cfg = MpcConfig { horizon: 20, ..MpcConfig::default() };
        let d = mpc_step(&[toy_model()], &[(1.0, 9.0)], -0.3, &cfg, None).unwrap();
        assert_eq!(d.status, SolveStatus::Optimal);
        let expected = cfg.mppt(1.0) + cfg.k_df * 0.3;
        assert!((d.p_ref[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn identical_groups_split_equally() {
        let cfg = MpcConfig { horizon: 30, ..MpcConfig::default() };
        let models = vec![toy_model(), toy_model()];
        let d = mpc_step(&models, &[(1.0, 9.0), (1.0, 9.0)], -0.4, &cfg, None).unwrap();
        assert_eq!(d.status, SolveStatus::Optimal);
        assert!((d.p_ref[0] - d.p_ref[1]).abs() < 1e-6);
        let total: f64 = d.p_ref.iter().sum::<f64>() - 2.0 * cfg.mppt(1.0);
        assert!((total - cfg.k_df * 0.4).abs() < 1e-6);
        let kkt = kkt_residuals(d.problem.as_ref().unwrap(), d.solution.as_ref().unwrap());
        assert!(kkt.max() <= 1e-6, "{kkt:?}");
    }

    #[test]
    fn permutation_symmetry() {
        let cfg = MpcConfig { horizon: 25, ..MpcConfig::default() };
        let mut other = toy_model();
        other.b[(0, 0)] = -0.02;
        other.b[(0, 1)] = 0.0035;
        let a = mpc_step(&[toy_model(), other.clone()], &[(1.0, 9.0), (0.9, 8.0)], -0.2, &cfg, None).unwrap();
        let b = mpc_step(&[other, toy_model()], &[(0.9, 8.0), (1.0, 9.0)], -0.2, &cfg, None).unwrap();
        assert!((a.p_ref[0] - b.p_ref[1]).abs() < 1e-6);
        assert!((a.p_ref[1] - b.p_ref[0]).abs() < 1e-6);
    }

    #[test]
    fn infeasible_request_falls_back() {
        let cfg = MpcConfig { horizon: 10, ..MpcConfig::default() };
        // far beyond what a single group can deliver
        let d = mpc_step(&[toy_model()], &[(1.0, 9.0)], -20.0, &cfg, None).unwrap();
        assert!(d.fallback);
        assert!(d.p_ref[0] <= cfg.p_max && d.p_ref[0] >= cfg.p_min);
    }

    #[test]
    fn controller_refreshes_models() {
        let cfg = MpcConfig { horizon: 10, refresh_interval: 3, window: 50, ..MpcConfig::default() };
        let mut c = MpcController::new(vec![toy_model()], cfg).unwrap();
        for k in 0..7 {
            let d = c.decide(&[(1.0, 9.0)], 0.0).unwrap();
            c.record(
                0,
                1.0 + 0.001 * k as f64,
                ControlInput::new(d.p_ref[0] + 0.01 * (k % 2) as f64, 9.0 + 0.1 * k as f64),
            );
        }
        assert_eq!(c.refits(), 2);
    }

    #[test]
    fn dispatch_log_csv() {
        let mut log = DispatchLog::default();
        log.push(DispatchRecord {
            time: 0.1,
            delta_f: -0.05,
            p_ref: vec![0.4, 0.5],
            status: "optimal".into(),
            iterations: 40,
            fallback: false,
        });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,delta_f,p_ref_1,p_ref_2,status,iterations,fallback\n0.1,-0.05,0.4,0.5,optimal,40,0\n");
    }
}
