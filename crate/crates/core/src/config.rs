use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by the solvers and the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Singular values below `rank * sigma_max` count as zero.
    pub rank: f64,
    /// Relative residual bound for identities checked to round-off.
    pub residual: f64,
    /// Largest principal angle (radians) accepted for subspace equality.
    pub angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-10,
            residual: 1e-8,
            angle: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn new(rank: f64, residual: f64, angle: f64) -> Result<Self> {
        let t = Self { rank, residual, angle };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank", self.rank), ("residual", self.residual), ("angle", self.angle)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} tolerance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
