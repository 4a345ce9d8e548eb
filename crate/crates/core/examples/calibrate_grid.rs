//! One-time calibration of the grid defaults.
//!
//! Searches the equivalent inertia, load damping, pre-disturbance load and the
//! governor's transient droop, reset time and water time so that the default scenario (5 % load step at 0.5 s,
//! three groups at 8/9/10 m/s) reaches a 49.3 Hz nadir with the farm in MPPT and 49.7 Hz with local
//! droop at K_df = 0.2, subject to the grid
//! settling after a step when run alone. The result is frozen into `GridParams::default()`.
//!
//! Run with `cargo run --release -p windfreq-core --example calibrate_grid`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windfreq_core::experiments::{run_frequency_experiment, Policy, RunOptions, Scenario};
use windfreq_core::grid::{grid_step, GridParams, GridState};

const MPPT_TARGET: f64 = 49.3;
const DROOP_TARGET: f64 = 49.7;

fn nadirs(grid: GridParams) -> Option<(f64, f64)> {
    let base = Scenario { grid, ..Scenario::default() };
    let mppt = run_frequency_experiment(&base.clone().with_policy(Policy::Mppt, 0.2), RunOptions::default()).ok()?;
    let droop = run_frequency_experiment(&base.with_policy(Policy::Droop, 0.2), RunOptions::default()).ok()?;
    Some((mppt.report.nadir_hz, droop.report.nadir_hz))
}

/// The grid alone must settle after a load step: frequency change over the
/// last second of a 200 s run below 1e-6 Hz.
fn settles(grid: &GridParams) -> bool {
    let p_wind = 0.3;
    let dt = 0.01;
    let Ok(mut s) = GridState::steady(grid, p_wind, grid.p_load0) else { return false };
    let mut tail = Vec::new();
    for k in 0..20_000 {
        let load = if k >= 50 { grid.p_load0 * 1.05 } else { grid.p_load0 };
        match grid_step(&s, p_wind, load, dt, grid) {
            Ok(next) => s = next,
            Err(_) => return false,
        }
        if k >= 19_900 {
            tail.push(s.f);
        }
    }
    (tail[tail.len() - 1] - tail[0]).abs() < 1e-6
}

fn cost(grid: GridParams) -> f64 {
    if !settles(&grid) {
        return f64::INFINITY;
    }
    match nadirs(grid) {
        // errors in units of the acceptance tolerances
        Some((a, b)) => ((a - MPPT_TARGET) / 0.15).powi(2) + ((b - DROOP_TARGET) / 0.1).powi(2),
        None => f64::INFINITY,
    }
}

const DIM: usize = 6;

fn with(x: [f64; DIM]) -> GridParams {
    let mut g = GridParams { h_sys: x[0], p_load0: x[1], damping: x[2], ..GridParams::default() };
    g.governor.transient_droop = x[3];
    g.governor.reset_time = x[4];
    g.governor.water_time = x[5];
    g
}

/// Coordinate search with shrinking steps inside `[lower, upper]`.
fn search(mut x: [f64; DIM], lower: [f64; DIM], upper: [f64; DIM]) -> ([f64; DIM], f64) {
    let mut best = cost(with(x));
    let mut step: [f64; DIM] = std::array::from_fn(|d| 0.1 * (upper[d] - lower[d]));
    for _ in 0..80 {
        let mut improved = false;
        for d in 0..DIM {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[d] = (y[d] + sign * step[d]).clamp(lower[d], upper[d]);
                let c = cost(with(y));
                if c < best {
                    best = c;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
            if (0..DIM).all(|d| step[d] < 1e-4 * (upper[d] - lower[d])) {
                break;
            }
        }
    }
    (x, best)
}

fn main() {
    let start = GridParams::default();
    let (a, b) = nadirs(start).expect("default grid runs");
    println!(
        "current defaults: h_sys {} p_load0 {} damping {} -> nadirs {a:.4} / {b:.4}",
        start.h_sys, start.p_load0, start.damping
    );

    let g = start.governor;
    let lower = [0.5, 0.44, 0.0, 0.05, 0.2, 0.2];
    let upper = [12.0, 1.0, 5.0, 1.0, 10.0, 3.0];
    // seeded random exploration, then local refinement of the best few
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut samples: Vec<([f64; DIM], f64)> = (0..4000)
        .map(|_| {
            let x: [f64; DIM] = std::array::from_fn(|d| rng.random_range(lower[d]..=upper[d]));
            (x, cost(with(x)))
        })
        .collect();
    samples
        .push(([start.h_sys, start.p_load0, start.damping, g.transient_droop, g.reset_time, g.water_time], f64::NAN));
    let last = samples.len() - 1;
    samples[last].1 = cost(with(samples[last].0));
    samples.sort_by(|a, b| a.1.total_cmp(&b.1));
    let starts: Vec<[f64; DIM]> = samples.iter().take(6).map(|s| s.0).collect();
    let (x, best) = starts
        .iter()
        .map(|&s0| search(s0, lower, upper))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    let (a, b) = nadirs(with(x)).expect("calibrated grid runs");
    println!(
        "calibrated: h_sys {:.4} p_load0 {:.4} damping {:.4} transient_droop {:.4} reset_time {:.4} water_time {:.4} -> nadirs {a:.4} / {b:.4} (cost {best:.3e})",
        x[0], x[1], x[2], x[3], x[4], x[5]
    );
}
