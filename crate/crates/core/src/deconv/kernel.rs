use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A kernel given through its characteristic function, supported in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum DeconvKernel {
    /// `φ_K = 1` on `[-1, 1]`; `K(z) = sin z / (π z)`.
    Indicator,
    /// `φ_K(t) = (1 − t²)^order` on `[-1, 1]`.
    Polynomial { order: u32 },
}

impl Default for DeconvKernel {
    fn default() -> Self {
        DeconvKernel::Polynomial { order: 3 }
    }
}

impl DeconvKernel {
    pub fn polynomial(order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("polynomial kernel order must be at least 1"));
        }
        Ok(DeconvKernel::Polynomial { order })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DeconvKernel::Polynomial { order: 0 } => {
                Err(Error::invalid("polynomial kernel order must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            return 0.0;
        }
        match *self {
            DeconvKernel::Indicator => 1.0,
            DeconvKernel::Polynomial { order } => (1.0 - t * t).powi(order as i32),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            DeconvKernel::Indicator => "indicator".into(),
            DeconvKernel::Polynomial { order } => format!("polynomial(order={order})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_properties() {
        for k in [DeconvKernel::Indicator, DeconvKernel::Polynomial { order: 3 }] {
            assert_eq!(k.phi(0.0), 1.0);
            assert_eq!(k.phi(1.0001), 0.0);
            assert_eq!(k.phi(-3.0), 0.0);
            assert_eq!(k.phi(0.4), k.phi(-0.4));
        }
        assert!(DeconvKernel::polynomial(0).is_err());
        // continuity at the edge of the support
        assert!(DeconvKernel::Polynomial { order: 1 }.phi(0.999_999) < 1e-5);
    }
}
