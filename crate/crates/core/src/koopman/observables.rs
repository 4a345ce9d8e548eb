use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::turbine::{ControlInput, TurbineParams};

/// Lifted dimension of the physics-informed observable set.
pub const SDMD_DIM: usize = 5;

/// How a `(omega_r, u)` sample is mapped to the lifted state `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableMap {
    /// `z = [ω, 1/v, ω/v, exp(−α ω v), ω²]`.
    Sdmd { alpha: f64 },
    /// `z = [ω, g₁(x), …, g_C(x)]` with Gaussian kernels over `x = (ω, v)`.
    Rbf(RbfDictionary),
}

impl ObservableMap {
    pub fn sdmd(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(ObservableMap::Sdmd { alpha })
    }

    pub fn dim(&self) -> usize {
        match self {
            ObservableMap::Sdmd { .. } => SDMD_DIM,
            ObservableMap::Rbf(d) => 1 + d.centers.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ObservableMap::Sdmd { .. } => "sdmd",
            ObservableMap::Rbf(_) => "rbf",
        }
    }

    /// Lifts one sample; the rotor speed is always the first coordinate.
    pub fn lift(&self, omega_r: f64, u: &ControlInput) -> Result<DVector<f64>> {
        let mut z = DVector::zeros(self.dim());
        self.lift_into(omega_r, u, z.as_mut_slice())?;
        Ok(z)
    }

    pub(crate) fn lift_into(&self, omega_r: f64, u: &ControlInput, out: &mut [f64]) -> Result<()> {
        match self {
            ObservableMap::Sdmd { alpha } => {
                let v = u.v_w;
                if !(v > 0.0) {
                    return Err(Error::domain(format!("lifting needs positive wind speed, got {v}")));
                }
                out[0] = omega_r;
                out[1] = 1.0 / v;
                out[2] = omega_r / v;
                out[3] = (-alpha * omega_r * v).exp();
                out[4] = omega_r * omega_r;
            }
            ObservableMap::Rbf(d) => {
                out[0] = omega_r;
                let w2 = d.width * d.width;
                for (slot, c) in out[1..].iter_mut().zip(&d.centers) {
                    let r2 = (omega_r - c[0]).powi(2) + (u.v_w - c[1]).powi(2);
                    *slot = (-r2 / w2).exp();
                }
            }
        }
        Ok(())
    }
}

/// Gaussian radial basis functions on the `(ω, v)` plane, in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfDictionary {
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
}

impl RbfDictionary {
    pub fn new(centers: Vec<[f64; 2]>, width: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("RBF dictionary needs at least one center"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(format!("RBF width must be positive, got {width}")));
        }
        Ok(Self { centers, width })
    }

    /// `count` centers drawn uniformly over the box with the width set to the
    /// mean nearest-center distance.
    pub fn uniform(count: usize, omega_range: (f64, f64), wind_range: (f64, f64), seed: u64) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid("RBF dictionary needs at least two centers"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<[f64; 2]> = (0..count)
            .map(|_| [rng.random_range(omega_range.0..omega_range.1), rng.random_range(wind_range.0..wind_range.1)])
            .collect();
        let width = mean_nearest_distance(&centers);
        Self::new(centers, width)
    }

    /// Default dictionary over the turbine's speed range and 3–15 m/s.
    pub fn for_turbine(count: usize, params: &TurbineParams, seed: u64) -> Result<Self> {
        Self::uniform(count, (params.omega_min, params.omega_max), (3.0, 15.0), seed)
    }
}

fn mean_nearest_distance(points: &[[f64; 2]]) -> f64 {
    let total: f64 = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / points.len() as f64
}

/// Starting value for α: the c₅ exponent of the power-coefficient formula,
/// `exp(−c₅/λ)` with `1/λ = v/(ω ω_base R)`, matched in its wind-speed
/// sensitivity at unit rotor speed.
pub fn alpha_from_cp(params: &TurbineParams) -> f64 {
    params.cp.0[4] / (params.radius * params.omega_base)
}
