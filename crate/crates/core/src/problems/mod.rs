//! Target densities over a uniform box base measure.
//!
//! Every target is a (log-)likelihood `L(θ)` over a finite box; the prior is
//! uniform on the box, so non-uniform priors must be folded into `L`. The
//! evidence reported by the engine is therefore `∫_box L(θ) dθ / Vol(box)`.

mod flat;
mod funnel;
mod gaussian;
mod linear_gaussian;
mod mixture;
mod registry;
mod torus;

use rand::Rng;

use crate::error::{Error, Result};

pub use flat::Flat;
pub use funnel::Funnel;
pub use gaussian::DiagonalGaussian;
pub use linear_gaussian::LinearGaussian;
pub use mixture::GaussianMixture;
pub use registry::{build_problem, ProblemParams, PROBLEM_NAMES};
pub use torus::{torus_log_norm, TorusReward};

/// Axis-aligned prior support. Lower bound strictly below upper in every dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PriorBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidProblem(format!(
                "prior box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidProblem(format!(
                    "prior box dimension {i} has bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn log_volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo).ln())
            .sum()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    /// Folds `x` back into the box by specular reflection off the walls,
    /// flipping the matching momentum components. Returns the number of wall
    /// hits.
    pub fn reflect_into(&self, x: &mut [f64], p: &mut [f64]) -> usize {
        let mut hits = 0;
        for i in 0..x.len() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            // A single step can cross the box more than once when dt is large.
            while x[i] < lo || x[i] > hi {
                if x[i] < lo {
                    x[i] = 2.0 * lo - x[i];
                } else {
                    x[i] = 2.0 * hi - x[i];
                }
                p[i] = -p[i];
                hits += 1;
            }
        }
        hits
    }

    /// Wraps `x` onto the periodic box `[lo, hi)`.
    pub fn wrap_into(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if x[i] < lo || x[i] >= hi {
                let w = hi - lo;
                x[i] = lo + (x[i] - lo).rem_euclid(w);
                // rem_euclid can round up to exactly w
                if x[i] >= hi {
                    x[i] = lo;
                }
            }
        }
    }
}

/// A differentiable log-likelihood over a uniform box prior.
///
/// Implementations must be immutable after construction: the sampler calls
/// them from many worker threads at once.
pub trait TargetProblem: Send + Sync {
    fn name(&self) -> &str;

    fn prior_box(&self) -> &PriorBox;

    fn dim(&self) -> usize {
        self.prior_box().dim()
    }

    fn log_like(&self, theta: &[f64]) -> f64;

    /// Score `∇ log L(θ)`, written into `grad`. Defaults to central finite
    /// differences, which costs `2·dim` extra likelihood evaluations.
    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        finite_difference_grad(self, theta, grad);
    }

    /// `ln(∫_box L dθ / Vol(box))` when known in closed form.
    fn analytic_log_z(&self) -> Option<f64> {
        None
    }

    /// Periodic problems wrap coordinates instead of reflecting at the walls.
    fn periodic(&self) -> bool {
        false
    }
}

impl<P: TargetProblem + ?Sized> TargetProblem for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn prior_box(&self) -> &PriorBox {
        (**self).prior_box()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_like(&self, theta: &[f64]) -> f64 {
        (**self).log_like(theta)
    }
    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        (**self).grad_log_like(theta, grad)
    }
    fn analytic_log_z(&self) -> Option<f64> {
        (**self).analytic_log_z()
    }
    fn periodic(&self) -> bool {
        (**self).periodic()
    }
}

/// Central differences with step `1e-5·(1 + |θᵢ|)`.
pub fn finite_difference_grad<P: TargetProblem + ?Sized>(problem: &P, theta: &[f64], grad: &mut [f64]) {
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        let h = 1e-5 * (1.0 + theta[i].abs());
        probe[i] = theta[i] + h;
        let up = problem.log_like(&probe);
        probe[i] = theta[i] - h;
        let down = problem.log_like(&probe);
        probe[i] = theta[i];
        grad[i] = (up - down) / (2.0 * h);
    }
}

/// A user-supplied log-likelihood without an analytic gradient.
pub struct FnProblem<F> {
    name: String,
    prior: PriorBox,
    log_like: F,
    periodic: bool,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, prior: PriorBox, log_like: F) -> Self {
        Self {
            name: name.into(),
            prior,
            log_like,
            periodic: false,
        }
    }

    pub fn periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }
}

impl<F> TargetProblem for FnProblem<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }
    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }
    fn log_like(&self, theta: &[f64]) -> f64 {
        (self.log_like)(theta)
    }
    fn periodic(&self) -> bool {
        self.periodic
    }
}

/// Checked log-likelihood: a non-finite value is an error, never replaced.
pub fn eval_log_like<P: TargetProblem + ?Sized>(problem: &P, theta: &[f64]) -> Result<f64> {
    let value = problem.log_like(theta);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteLikelihood {
            value,
            position: theta.to_vec(),
        })
    }
}

/// Checked score. A zero vector is returned as-is; the caller decides what a
/// vanishing gradient means.
pub fn eval_grad<P: TargetProblem + ?Sized>(problem: &P, theta: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; theta.len()];
    problem.grad_log_like(theta, &mut grad);
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(Error::InvalidProblem(format!(
            "non-finite gradient {grad:?} at {theta:?}"
        )))
    }
}

/// `count` i.i.d. uniform draws from the problem's prior box.
pub fn sample_prior<P, R>(problem: &P, count: usize, rng: &mut R) -> Vec<Vec<f64>>
where
    P: TargetProblem + ?Sized,
    R: Rng + ?Sized,
{
    (0..count).map(|_| problem.prior_box().sample(rng)).collect()
}

/// `ln(Φ(b) − Φ(a))` for the standard normal, `a < b`.
pub(crate) fn log_normal_interval(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Evaluate on the side where erfc keeps precision.
    let mass = if a >= 0.0 {
        0.5 * (libm::erfc(a * s) - libm::erfc(b * s))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * s) - libm::erfc(-a * s))
    } else {
        0.5 * (libm::erf(b * s) - libm::erf(a * s))
    };
    mass.ln()
}
