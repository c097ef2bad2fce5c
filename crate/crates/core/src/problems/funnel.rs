use std::f64::consts::PI;

use super::{PriorBox, TargetProblem};
use crate::error::{Error, Result};

/// Neal's funnel: `v ~ N(0, σ_v²)`, `xᵢ | v ~ N(0, e^v)` for the remaining
/// `d − 1` coordinates. `θ₀ = v`.
///
/// The density is restricted to `v ∈ [−v_b, v_b]`, `xᵢ ∈ [−x_b, x_b]`.
#[derive(Debug, Clone)]
pub struct Funnel {
    scale_v: f64,
    prior: PriorBox,
}

pub const DEFAULT_FUNNEL_V_BOUND: f64 = 10.0;
pub const DEFAULT_FUNNEL_X_BOUND: f64 = 20.0;

impl Funnel {
    pub fn new(dim: usize, scale_v: f64, v_bound: f64, x_bound: f64) -> Result<Self> {
        if dim < 2 || !(scale_v > 0.0) || !(v_bound > 0.0) || !(x_bound > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "funnel needs dim ≥ 2 and positive scales (got {dim}, {scale_v}, {v_bound}, {x_bound})"
            )));
        }
        let mut lower = vec![-x_bound; dim];
        let mut upper = vec![x_bound; dim];
        lower[0] = -v_bound;
        upper[0] = v_bound;
        Ok(Self {
            scale_v,
            prior: PriorBox::new(lower, upper)?,
        })
    }

    /// The 10-D benchmark with `σ_v = 3`.
    pub fn standard() -> Result<Self> {
        Self::new(10, 3.0, DEFAULT_FUNNEL_V_BOUND, DEFAULT_FUNNEL_X_BOUND)
    }

    /// Mass of the funnel inside the box, by marginalizing the `xᵢ`
    /// analytically and integrating over `v` with composite Simpson.
    fn log_box_mass(&self) -> f64 {
        let k = (self.dim() - 1) as i32;
        let (vl, vu) = (self.prior.lower()[0], self.prior.upper()[0]);
        let xb = self.prior.upper()[1];
        let sv = self.scale_v;
        let integrand = |v: f64| {
            let pv = (-0.5 * (v / sv).powi(2)).exp() / (sv * (2.0 * PI).sqrt());
            let sd = (0.5 * v).exp();
            pv * libm::erf(xb / (sd * std::f64::consts::SQRT_2)).powi(k)
        };
        let intervals = 20_000;
        let h = (vu - vl) / intervals as f64;
        let mut acc = integrand(vl) + integrand(vu);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(vl + i as f64 * h);
        }
        (acc * h / 3.0).ln()
    }
}

impl TargetProblem for Funnel {
    fn name(&self) -> &str {
        "funnel"
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        let v = theta[0];
        let k = (theta.len() - 1) as f64;
        let sv2 = self.scale_v * self.scale_v;
        let x2: f64 = theta[1..].iter().map(|x| x * x).sum();
        -0.5 * v * v / sv2 - 0.5 * (2.0 * PI * sv2).ln() - 0.5 * x2 * (-v).exp()
            - 0.5 * k * ((2.0 * PI).ln() + v)
    }

    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        let v = theta[0];
        let k = (theta.len() - 1) as f64;
        let inv = (-v).exp();
        let x2: f64 = theta[1..].iter().map(|x| x * x).sum();
        grad[0] = -v / (self.scale_v * self.scale_v) + 0.5 * x2 * inv - 0.5 * k;
        for (g, x) in grad[1..].iter_mut().zip(&theta[1..]) {
            *g = -x * inv;
        }
    }

    fn analytic_log_z(&self) -> Option<f64> {
        Some(self.log_box_mass() - self.prior.log_volume())
    }
}
