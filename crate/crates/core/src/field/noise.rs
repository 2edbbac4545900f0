use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::innovation::sample_laplace;
use crate::error::{Condition, Error, Result};

/// Structured-text form of a noise law. `Gaussian` parses but never builds:
/// its characteristic function decays faster than any power of `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    Laplace { scale: f64 },
    SymGamma { shape: u32, scale: f64 },
    Gaussian { scale: f64 },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseModel> {
        match *self {
            NoiseSpec::None => Ok(NoiseModel::None),
            NoiseSpec::Laplace { scale } => NoiseModel::laplace(scale),
            NoiseSpec::SymGamma { shape, scale } => NoiseModel::symmetric_gamma(shape, scale),
            NoiseSpec::Gaussian { .. } => Err(Error::violation(
                Condition::A3,
                "noise violates A3: Gaussian characteristic function decays faster than |t|^-β for every β > 0",
            )),
        }
    }
}

/// An ordinary-smooth error law with `|t|^β φ_θ(t) → B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// No contamination: `φ_θ ≡ 1`, `β = 0`, `B = 1`.
    None,
    /// Density `e^{-|x|/σ} / 2σ`, `φ_θ(t) = 1 / (1 + σ²t²)`.
    Laplace { scale: f64 },
    /// Difference of two independent `Gamma(k, σ)` variables,
    /// `φ_θ(t) = (1 + σ²t²)^{-k}`. `k = 1` is Laplace.
    SymmetricGamma { shape: u32, scale: f64 },
}

impl NoiseModel {
    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("Laplace noise scale must be positive"));
        }
        Ok(NoiseModel::Laplace { scale })
    }

    pub fn symmetric_gamma(shape: u32, scale: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::invalid("symmetric gamma shape must be at least 1"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("symmetric gamma scale must be positive"));
        }
        Ok(NoiseModel::SymmetricGamma { shape, scale })
    }

    /// Always rejected.
    pub fn gaussian(scale: f64) -> Result<Self> {
        NoiseSpec::Gaussian { scale }.build()
    }

    pub fn tag(&self) -> String {
        match self {
            NoiseModel::None => "none".into(),
            NoiseModel::Laplace { scale } => format!("laplace(scale={scale})"),
            NoiseModel::SymmetricGamma { shape, scale } => {
                format!("sym_gamma(shape={shape},scale={scale})")
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseModel::None)
    }

    /// Characteristic function; real and even for every shipped model.
    pub fn cf(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::None => 1.0,
            NoiseModel::Laplace { scale } => 1.0 / (1.0 + scale * scale * t * t),
            NoiseModel::SymmetricGamma { shape, scale } => {
                (1.0 + scale * scale * t * t).powi(-(shape as i32))
            }
        }
    }

    /// `1 / φ_θ(t)`, evaluated without dividing.
    pub fn inverse_cf(&self, t: f64) -> f64 {
        match *self {
            NoiseModel::None => 1.0,
            NoiseModel::Laplace { scale } => 1.0 + scale * scale * t * t,
            NoiseModel::SymmetricGamma { shape, scale } => {
                (1.0 + scale * scale * t * t).powi(shape as i32)
            }
        }
    }

    /// Smoothness order `β`.
    pub fn beta(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Laplace { .. } => 2.0,
            NoiseModel::SymmetricGamma { shape, .. } => 2.0 * shape as f64,
        }
    }

    /// Limit constant `B = lim |t|^β |φ_θ(t)|`.
    pub fn limit_constant(&self) -> f64 {
        match *self {
            NoiseModel::None => 1.0,
            NoiseModel::Laplace { scale } => scale.powi(-2),
            NoiseModel::SymmetricGamma { shape, scale } => scale.powi(-2 * shape as i32),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Laplace { scale } => 2.0 * scale * scale,
            NoiseModel::SymmetricGamma { shape, scale } => 2.0 * shape as f64 * scale * scale,
        }
    }

    /// Density of θ; `None` for the degenerate no-noise model.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            NoiseModel::None => None,
            NoiseModel::Laplace { scale } => Some((-x.abs() / scale).exp() / (2.0 * scale)),
            NoiseModel::SymmetricGamma { shape, scale } => {
                // f(x) = e^{-a/σ} / (Γ(k)² σ^{2k}) Σ_j C(k-1, j) a^{k-1-j} Γ(k+j) (σ/2)^{k+j}
                let k = shape as i32;
                let a = x.abs();
                let gamma_k = factorial(k - 1);
                let mut sum = 0.0;
                let mut binom = 1.0;
                for j in 0..k {
                    sum += binom
                        * a.powi(k - 1 - j)
                        * factorial(k + j - 1)
                        * (scale / 2.0).powi(k + j);
                    binom = binom * (k - 1 - j) as f64 / (j + 1) as f64;
                }
                Some((-a / scale).exp() * sum / (gamma_k * gamma_k * scale.powi(2 * k)))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Laplace { scale } => sample_laplace(rng, scale),
            NoiseModel::SymmetricGamma { shape, scale } => {
                let g = Gamma::new(shape as f64, scale).expect("validated gamma parameters");
                g.sample(rng) - g.sample(rng)
            }
        }
    }
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
