//! Shared fixtures for the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use windfreq_core::experiments::{gen_wind, turbine_training_trajectory, Excitation, WindDescriptor};
use windfreq_core::koopman::{collect_snapshots, fit_model, ObservableMap, RbfDictionary, SnapshotSet};
use windfreq_core::mpc::build_qp;
use windfreq_core::turbine::mppt_reference;
use windfreq_core::{ControlInput, LiftedModel, MpcConfig, Policy, QpProblem, Scenario, Trajectory, TurbineParams};

pub const CONTROL_STEP: f64 = 0.1;
pub const SUBSTEPS: usize = 10;

/// Excited training history of one turbine group under turbulent wind around
/// `mean_wind`.
pub fn training_history(mean_wind: f64, seconds: f64, seed: u64) -> Trajectory {
    let params = TurbineParams::default();
    let wind = gen_wind(&WindDescriptor::fixed(mean_wind), seconds, CONTROL_STEP, seed).expect("valid wind");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    turbine_training_trajectory(&wind, &params, CONTROL_STEP, SUBSTEPS, &Excitation::default(), &mut rng)
        .expect("training run stays bounded")
}

pub fn sdmd_map() -> ObservableMap {
    ObservableMap::sdmd(1.0).expect("positive alpha")
}

pub fn rbf_map(centers: usize) -> ObservableMap {
    ObservableMap::Rbf(RbfDictionary::uniform(centers, (0.7, 1.3), (3.0, 15.0), 1).expect("valid dictionary"))
}

pub fn snapshots(history: &Trajectory, map: &ObservableMap) -> SnapshotSet {
    collect_snapshots(history, map).expect("history has pairs")
}

/// Controller settings of the default three-group MPC scenario.
pub fn mpc_config() -> MpcConfig {
    Scenario::default().with_policy(Policy::Mpc, 0.2).effective_mpc()
}

/// Three physics-informed group models fitted on ten-minute histories.
pub fn group_models() -> Vec<LiftedModel> {
    [8.0, 9.0, 10.0]
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let h = training_history(v, 600.0, i as u64 + 1);
            fit_model(&snapshots(&h, &sdmd_map())).expect("well-posed fit")
        })
        .collect()
}

/// The condensed dispatch QP of one control step, taken `delta_f` Hz below
/// nominal with each group at its MPPT equilibrium speed.
pub fn dispatch_problem(models: &[LiftedModel], config: &MpcConfig, delta_f: f64) -> QpProblem {
    let params = TurbineParams::default();
    let measurements = [(1.05, 8.0), (1.12, 9.0), (1.2, 10.0)];
    let p_mppt: Vec<f64> = measurements.iter().map(|&(w, _)| mppt_reference(w, &params)).collect();
    let init: Vec<(f64, ControlInput)> =
        measurements.iter().zip(&p_mppt).map(|(&(w, v), &p)| (w, ControlInput::new(p, v))).collect();
    let forecast: Vec<Vec<f64>> = measurements.iter().map(|&(_, v)| vec![v; config.horizon]).collect();
    build_qp(models, &init, &forecast, delta_f, &p_mppt, config).expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use windfreq_core::mpc::solve_qp;
    use windfreq_core::SolveStatus;

    #[test]
    fn dispatch_fixture_is_solvable() {
        let models = group_models();
        let config = mpc_config();
        let problem = dispatch_problem(&models, &config, -0.3);
        assert_eq!(problem.g.len(), 3 * config.horizon);
        assert_eq!(solve_qp(&problem, &config.solver, None).unwrap().status, SolveStatus::Optimal);
    }
}
