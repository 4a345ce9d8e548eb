//! Lifted linear predictors of rotor speed.
//!
//! A sample `(ω_r, u)` is mapped to observables `z`, consecutive samples are
//! paired into snapshot matrices, and `z_{k+1} ≈ A z_k + B u_k` is fitted by
//! minimum-norm least squares.

mod io;
mod model;
mod observables;
mod snapshots;

pub use io::{load_model, read_model, save_model, write_model};
pub use model::{
    alpha_grid, fit_linear, fit_model, fit_model_with, select_alpha, update_model, AlphaSelection, FitOptions,
    LiftedModel, SlidingWindow,
};
pub use observables::{alpha_from_cp, ObservableMap, RbfDictionary, SDMD_DIM};
pub use snapshots::{collect_snapshots, collect_snapshots_from, SnapshotSet, Trajectory};

/// Default length of the online refit window, in snapshot pairs.
pub const DEFAULT_WINDOW: usize = 6000;
