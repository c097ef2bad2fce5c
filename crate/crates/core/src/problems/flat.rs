use super::{PriorBox, TargetProblem};
use crate::error::{Error, Result};

/// Constant likelihood `L ≡ e^level` over the unit cube.
#[derive(Debug, Clone)]
pub struct Flat {
    level: f64,
    prior: PriorBox,
}

impl Flat {
    pub fn new(dim: usize, level: f64) -> Result<Self> {
        if dim == 0 || !level.is_finite() {
            return Err(Error::InvalidProblem(format!("flat needs dim ≥ 1 and finite level (got {dim}, {level})")));
        }
        Ok(Self {
            level,
            prior: PriorBox::cube(dim, 0.0, 1.0)?,
        })
    }
}

impl TargetProblem for Flat {
    fn name(&self) -> &str {
        "flat"
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, _theta: &[f64]) -> f64 {
        self.level
    }

    fn grad_log_like(&self, _theta: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }

    fn analytic_log_z(&self) -> Option<f64> {
        Some(self.level)
    }
}
