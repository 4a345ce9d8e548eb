use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest wind speed a generated series may take (m/s).
pub const WIND_FLOOR: f64 = 0.5;

/// How the mean speed of a profile is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MeanSpeed {
    Fixed { speed: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl MeanSpeed {
    pub fn weibull_default() -> Self {
        MeanSpeed::Weibull { shape: 2.0, scale: 8.5 }
    }

    /// Draws a mean speed (a fixed mean ignores the generator).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            MeanSpeed::Fixed { speed } => Ok(speed),
            MeanSpeed::Weibull { shape, scale } => {
                let d = Weibull::new(scale, shape)
                    .map_err(|e| Error::invalid(format!("Weibull(shape {shape}, scale {scale}): {e}")))?;
                Ok(d.sample(rng))
            }
        }
    }
}

/// Wind profile of one turbine group: a mean plus first-order
/// autocorrelated turbulence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindDescriptor {
    pub mean: MeanSpeed,
    /// Turbulence standard deviation as a fraction of the mean.
    #[serde(default = "default_intensity")]
    pub turbulence_intensity: f64,
    /// Correlation time of the turbulence (s).
    #[serde(default = "default_correlation")]
    pub correlation_time: f64,
    /// Stream seed; derived from the scenario seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_intensity() -> f64 {
    0.08
}

fn default_correlation() -> f64 {
    2.0
}

impl WindDescriptor {
    pub fn fixed(speed: f64) -> Self {
        Self {
            mean: MeanSpeed::Fixed { speed },
            turbulence_intensity: default_intensity(),
            correlation_time: default_correlation(),
            seed: None,
        }
    }

    pub fn weibull() -> Self {
        Self { mean: MeanSpeed::weibull_default(), ..Self::fixed(0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mean {
            MeanSpeed::Fixed { speed } if !(speed > 0.0 && speed.is_finite()) => {
                return Err(Error::invalid(format!("mean wind speed must be positive, got {speed}")))
            }
            MeanSpeed::Weibull { shape, scale } if !(shape > 0.0 && scale > 0.0) => {
                return Err(Error::invalid("Weibull shape and scale must be positive"))
            }
            _ => {}
        }
        if !(self.turbulence_intensity >= 0.0 && self.turbulence_intensity.is_finite()) {
            return Err(Error::invalid("turbulence intensity must be non-negative"));
        }
        if !(self.correlation_time > 0.0) {
            return Err(Error::invalid("turbulence correlation time must be positive"));
        }
        Ok(())
    }
}

/// Generates `round(duration/dt) + 1` samples of wind speed.
///
/// The mean is drawn first, then an AR(1) sequence with stationary standard
/// deviation `TI · mean` and coefficient `exp(−dt/τ)` is added; the sum is
/// floored at [`WIND_FLOOR`]. Identical inputs give identical series.
pub fn gen_wind(descriptor: &WindDescriptor, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    descriptor.validate()?;
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::domain("wind duration and step must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(descriptor.seed.unwrap_or(seed));
    let mean = descriptor.mean.draw(&mut rng)?;
    let n = (duration / dt).round() as usize + 1;
    let sigma = descriptor.turbulence_intensity * mean;
    let a = (-dt / descriptor.correlation_time).exp();
    let innovation = sigma * (1.0 - a * a).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut x: f64 = if sigma > 0.0 { sigma * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
    for k in 0..n {
        if k > 0 && sigma > 0.0 {
            x = a * x + innovation * rng.sample::<f64, _>(StandardNormal);
        }
        out.push((mean + x).max(WIND_FLOOR));
    }
    Ok(out)
}
