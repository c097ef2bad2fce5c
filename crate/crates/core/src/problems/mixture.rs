use std::f64::consts::PI;

use super::{log_normal_interval, PriorBox, TargetProblem};
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Equal-weight mixture of isotropic Gaussians in any dimension.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    name: &'static str,
    centers: Vec<Vec<f64>>,
    sigma: f64,
    prior: PriorBox,
    log_norm: f64,
}

impl GaussianMixture {
    pub fn new(name: &'static str, centers: Vec<Vec<f64>>, sigma: f64, prior: PriorBox) -> Result<Self> {
        let dim = prior.dim();
        if centers.is_empty() || centers.iter().any(|c| c.len() != dim) || !(sigma > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "mixture needs ≥ 1 center of dimension {dim} and σ > 0"
            )));
        }
        let log_norm = -(centers.len() as f64).ln() - 0.5 * dim as f64 * (2.0 * PI * sigma * sigma).ln();
        Ok(Self {
            name,
            centers,
            sigma,
            prior,
            log_norm,
        })
    }

    /// Nine modes on the grid `{−5, 0, 5}²`, σ = 0.3, box `[−10, 10]²`.
    pub fn nine_modes() -> Result<Self> {
        Self::grid("mixture9", 3, 5.0, 0.3, 10.0)
    }

    /// 25 modes on the grid `{−10, −5, 0, 5, 10}²` with variance 0.3, box `[−15, 15]²`.
    pub fn twenty_five_modes() -> Result<Self> {
        Self::grid("mixture25", 5, 5.0, 0.3_f64.sqrt(), 15.0)
    }

    /// `side × side` modes spaced `spacing` apart, centered on the origin.
    pub fn grid(name: &'static str, side: usize, spacing: f64, sigma: f64, half_width: f64) -> Result<Self> {
        let offset = (side as f64 - 1.0) / 2.0;
        let mut centers = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                centers.push(vec![(i as f64 - offset) * spacing, (j as f64 - offset) * spacing]);
            }
        }
        Self::new(name, centers, sigma, PriorBox::cube(2, -half_width, half_width)?)
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn component_terms(&self, theta: &[f64]) -> Vec<f64> {
        let inv = 0.5 / (self.sigma * self.sigma);
        self.centers
            .iter()
            .map(|c| -inv * c.iter().zip(theta).map(|(m, x)| (x - m) * (x - m)).sum::<f64>())
            .collect()
    }
}

impl TargetProblem for GaussianMixture {
    fn name(&self) -> &str {
        self.name
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        self.log_norm + log_sum_exp(&self.component_terms(theta))
    }

    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        let terms = self.component_terms(theta);
        let lse = log_sum_exp(&terms);
        grad.fill(0.0);
        let inv = 1.0 / (self.sigma * self.sigma);
        for (c, t) in self.centers.iter().zip(&terms) {
            let r = (t - lse).exp();
            for ((g, m), x) in grad.iter_mut().zip(c).zip(theta) {
                *g += r * (m - x) * inv;
            }
        }
    }

    fn analytic_log_z(&self) -> Option<f64> {
        let (lo, hi) = (self.prior.lower(), self.prior.upper());
        let per_component: Vec<f64> = self
            .centers
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(i, m)| log_normal_interval((lo[i] - m) / self.sigma, (hi[i] - m) / self.sigma))
                    .sum()
            })
            .collect();
        Some(log_sum_exp(&per_component) - (self.centers.len() as f64).ln() - self.prior.log_volume())
    }
}
