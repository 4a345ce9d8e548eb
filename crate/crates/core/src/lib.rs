//! Simulation, identification and predictive control of DFIG wind farms
//! providing primary frequency regulation.
//!
//! The crate is split along the data flow of a study:
//!
//! * [`turbine`] integrates the electromechanical state of one aggregated
//!   turbine group (aerodynamics, two-mass drive train, pitch protection).
//! * [`grid`] is a single-bus frequency response model with a hydro governor.
//! * [`koopman`] lifts rotor-speed trajectories into a small set of
//!   observables and fits a linear predictor by least squares.
//! * [`mpc`] condenses the lifted predictors into a dense QP and solves it
//!   with an operator-splitting method.
//! * [`experiments`] wires everything into closed-loop scenarios and metrics.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is
// rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod koopman;
pub mod linalg;
pub mod mpc;
pub mod turbine;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use experiments::{FrequencyRun, IdentificationConfig, IdentificationReport, MetricsReport, Policy, Scenario};
pub use grid::{GridParams, GridState};
pub use koopman::{LiftedModel, ObservableMap, SnapshotSet, Trajectory};
pub use mpc::{MpcConfig, QpProblem, QpSolution, SolveStatus};
pub use turbine::{ControlInput, TurbineParams, TurbineState};
