use std::f64::consts::PI;

use super::{PriorBox, TargetProblem};
use crate::error::{Error, Result};

/// Cubic trigonometric reward on the n-torus `[0, 2π)^n`:
///
/// `R(x) = (Σ_{i even} sin(α xᵢ) + Σ_{j odd} cos(β xⱼ) + c)³`
///
/// with zero-based indices, so `x₀` enters through the sine. `c > n` keeps the
/// base positive everywhere.
#[derive(Debug, Clone)]
pub struct TorusReward {
    alpha: f64,
    beta: f64,
    offset: f64,
    prior: PriorBox,
}

impl TorusReward {
    pub fn new(dim: usize, alpha: f64, beta: f64, offset: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidProblem("torus needs dim ≥ 1".into()));
        }
        if !(offset > dim as f64) {
            return Err(Error::InvalidProblem(format!(
                "torus offset c = {offset} must exceed the dimension {dim}"
            )));
        }
        for (name, f) in [("alpha", alpha), ("beta", beta)] {
            if !f.is_finite() || f.fract() != 0.0 {
                // The closed-form normalization and the smooth wrap-around both
                // need whole-number frequencies.
                return Err(Error::InvalidProblem(format!("torus {name} = {f} must be an integer")));
            }
        }
        Ok(Self {
            alpha,
            beta,
            offset,
            prior: PriorBox::cube(dim, 0.0, 2.0 * PI)?,
        })
    }

    /// The default benchmark setting `α = 2, β = 3, c = n + 1`.
    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(dim, 2.0, 3.0, dim as f64 + 1.0)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn base(&self, x: &[f64]) -> f64 {
        let mut s = self.offset;
        for (i, xi) in x.iter().enumerate() {
            s += if i % 2 == 0 {
                (self.alpha * xi).sin()
            } else {
                (self.beta * xi).cos()
            };
        }
        s
    }
}

impl TargetProblem for TorusReward {
    fn name(&self) -> &str {
        "torus"
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        3.0 * self.base(theta).ln()
    }

    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        let scale = 3.0 / self.base(theta);
        for (i, (g, xi)) in grad.iter_mut().zip(theta).enumerate() {
            *g = scale
                * if i % 2 == 0 {
                    self.alpha * (self.alpha * xi).cos()
                } else {
                    -self.beta * (self.beta * xi).sin()
                };
        }
    }

    /// `ln Zₙ − n·ln 2π`: the reward integral divided by the torus volume.
    fn analytic_log_z(&self) -> Option<f64> {
        let n = self.dim();
        Some(torus_log_norm(n, self.alpha, self.beta, self.offset) - n as f64 * (2.0 * PI).ln())
    }

    fn periodic(&self) -> bool {
        true
    }
}

/// `ln Zₙ` with `Zₙ = ∫_{[0,2π)^n} R dx`, from the recursion
/// `Zₙ = 2π Zₙ₋₁ + 3πc(2π)^{n−1}`, `Z₁ = 2πc³ + 3πc`.
///
/// The frequencies do not enter the value (only whole-number frequencies are
/// valid). The recursion is carried on `Zₖ/(2π)^k` so large `n` cannot
/// overflow.
pub fn torus_log_norm(n: usize, _alpha: f64, _beta: f64, c: f64) -> f64 {
    assert!(n >= 1, "torus dimension must be positive");
    // zₖ = Zₖ/(2π)^k obeys zₖ = zₖ₋₁ + 3c/2.
    let mut z = c.powi(3) + 1.5 * c;
    for _ in 2..=n {
        z += 1.5 * c;
    }
    z.ln() + n as f64 * (2.0 * PI).ln()
}
