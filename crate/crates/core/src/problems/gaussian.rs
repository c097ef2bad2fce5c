use std::f64::consts::PI;

use super::{log_normal_interval, PriorBox, TargetProblem};
use crate::error::{Error, Result};

/// Isotropic normal density `N(0, σ²I)` over the cube `[−b, b]^d`.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    sigma: f64,
    prior: PriorBox,
    log_norm: f64,
}

impl DiagonalGaussian {
    pub fn new(dim: usize, sigma: f64, half_width: f64) -> Result<Self> {
        if dim == 0 || !(sigma > 0.0) || !(half_width > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "gaussian needs dim ≥ 1, σ > 0, half-width > 0 (got {dim}, {sigma}, {half_width})"
            )));
        }
        Ok(Self {
            sigma,
            prior: PriorBox::cube(dim, -half_width, half_width)?,
            log_norm: -0.5 * dim as f64 * (2.0 * PI * sigma * sigma).ln(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl TargetProblem for DiagonalGaussian {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        let r2: f64 = theta.iter().map(|x| x * x).sum();
        self.log_norm - 0.5 * r2 / (self.sigma * self.sigma)
    }

    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        let inv = 1.0 / (self.sigma * self.sigma);
        for (g, x) in grad.iter_mut().zip(theta) {
            *g = -x * inv;
        }
    }

    /// Product of per-axis normal masses inside the box over the box volume.
    fn analytic_log_z(&self) -> Option<f64> {
        let d = self.dim() as f64;
        let hi = self.prior.upper()[0];
        let lo = self.prior.lower()[0];
        Some(d * (log_normal_interval(lo / self.sigma, hi / self.sigma) - (hi - lo).ln()))
    }
}
