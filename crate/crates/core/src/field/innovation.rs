use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Law of the i.i.d. innovations driving a field. All options are centered
/// and symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum InnovationSpec {
    /// `N(0, 1)`.
    StandardNormal,
    /// Uniform on `[-√3, √3]` (unit variance).
    Uniform,
    /// Centered Laplace with scale `scale` (variance `2 scale²`).
    Laplace { scale: f64 },
}

impl InnovationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationSpec::Laplace { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::invalid("Laplace innovation scale must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            InnovationSpec::StandardNormal => StandardNormal.sample(rng),
            InnovationSpec::Uniform => rng.random_range(-SQRT_3..SQRT_3),
            InnovationSpec::Laplace { scale } => sample_laplace(rng, scale),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InnovationSpec::StandardNormal | InnovationSpec::Uniform => 1.0,
            InnovationSpec::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            InnovationSpec::StandardNormal => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            InnovationSpec::Uniform => {
                if x.abs() <= SQRT_3 {
                    0.5 / SQRT_3
                } else {
                    0.0
                }
            }
            InnovationSpec::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
        }
    }

    /// Points where the density is not smooth.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match *self {
            InnovationSpec::StandardNormal => vec![],
            InnovationSpec::Uniform => vec![-SQRT_3, SQRT_3],
            InnovationSpec::Laplace { .. } => vec![0.0],
        }
    }

    /// Standard deviation of the law (used to size integration windows).
    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `‖ε₀‖_p = (E|ε₀|^p)^{1/p}` for `p ∈ {2, 3, 4}`.
    pub fn abs_moment_norm(&self, p: u32) -> Result<f64> {
        let m = match (*self, p) {
            (InnovationSpec::StandardNormal, 2) => 1.0,
            (InnovationSpec::StandardNormal, 3) => 2.0 * (2.0 / PI).sqrt(),
            (InnovationSpec::StandardNormal, 4) => 3.0,
            // E|U|^p = (√3)^p / (p + 1)
            (InnovationSpec::Uniform, 2..=4) => SQRT_3.powi(p as i32) / (p as f64 + 1.0),
            // E|L|^p = scale^p Γ(p + 1)
            (InnovationSpec::Laplace { scale }, 2) => 2.0 * scale.powi(2),
            (InnovationSpec::Laplace { scale }, 3) => 6.0 * scale.powi(3),
            (InnovationSpec::Laplace { scale }, 4) => 24.0 * scale.powi(4),
            _ => return Err(Error::Unsupported(format!("moment order p = {p} for {self:?}"))),
        };
        Ok(m.powf(1.0 / p as f64))
    }

    /// `‖ε₀ − ε₀'‖_p` for an independent copy `ε₀'`, `p ∈ {2, 3, 4}`.
    pub fn coupling_norm(&self, p: u32) -> Result<f64> {
        let m = match (*self, p) {
            // ε − ε' has variance 2·Var ε
            (_, 2) => 2.0 * self.variance(),
            // ε − ε' ~ N(0, 2): E|D|³ = 2√(2/π)·2^{3/2}
            (InnovationSpec::StandardNormal, 3) => 8.0 / PI.sqrt(),
            // triangular on [-2√3, 2√3]: E|D|³ = 0.8·(√3)³
            (InnovationSpec::Uniform, 3) => 0.8 * SQRT_3.powi(3),
            // D has density (1 + |x|/s) e^{-|x|/s} / (4s)
            (InnovationSpec::Laplace { scale }, 3) => 15.0 * scale.powi(3),
            // symmetric laws: E D⁴ = 2 m₄ + 6 m₂²
            (_, 4) => {
                let m2 = self.variance();
                let m4 = self.abs_moment_norm(4)?.powi(4);
                2.0 * m4 + 6.0 * m2 * m2
            }
            _ => return Err(Error::Unsupported(format!("moment order p = {p} for {self:?}"))),
        };
        Ok(m.powf(1.0 / p as f64))
    }
}

pub(crate) fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    // inverse CDF on a symmetric uniform
    let u: f64 = rng.random::<f64>() - 0.5;
    let mag = -(1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
    scale * mag.copysign(u)
}
