use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{PriorBox, TargetProblem};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Linear-Gaussian inverse problem `y = Aθ + ε`, `ε ~ N(0, σ²I)`, with a
/// correlated Gaussian prior `θ ~ N(μ₀, Σ₀)` folded into the likelihood:
///
/// `L(θ) = N(y; Aθ, σ²I) · N(θ; μ₀, Σ₀)`.
///
/// Over a box that contains the posterior, `∫ L dθ` is the marginal likelihood
/// `N(y; Aμ₀, AΣ₀Aᵀ + σ²I)` and the posterior is Gaussian with precision
/// `AᵀA/σ² + Σ₀⁻¹`.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    obs: usize,
    forward: Vec<f64>,
    data: Vec<f64>,
    noise_var: f64,
    prior_mean: Vec<f64>,
    prior_precision: Vec<f64>,
    log_const: f64,
    log_evidence: f64,
    posterior_mean: Vec<f64>,
    posterior_sd: Vec<f64>,
    prior: PriorBox,
}

impl LinearGaussian {
    /// Builds the problem from an explicit operator (row-major `obs × dim`),
    /// data, noise level, and prior. The box is `μ₀ ± box_sds·√diag(Σ₀)`.
    pub fn new(
        forward: DMatrix<f64>,
        data: DVector<f64>,
        noise_sd: f64,
        prior_mean: DVector<f64>,
        prior_cov: DMatrix<f64>,
        box_sds: f64,
    ) -> Result<Self> {
        let (obs, dim) = forward.shape();
        if data.len() != obs || prior_mean.len() != dim || prior_cov.shape() != (dim, dim) {
            return Err(Error::InvalidProblem("linear-gaussian shapes do not agree".into()));
        }
        if !(noise_sd > 0.0) || !(box_sds > 0.0) {
            return Err(Error::InvalidProblem("noise sd and box width must be positive".into()));
        }
        let noise_var = noise_sd * noise_sd;
        let prior_chol = prior_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("prior covariance is not positive definite".into()))?;
        let prior_precision = prior_chol.inverse();
        let log_det_prior = 2.0 * prior_chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();

        // Marginal likelihood of the data.
        let marginal_cov = &forward * &prior_cov * forward.transpose() + DMatrix::identity(obs, obs) * noise_var;
        let marginal_chol = marginal_cov
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("marginal covariance is not positive definite".into()))?;
        let resid = &data - &forward * &prior_mean;
        let whitened = marginal_chol.l().solve_lower_triangular(&resid).expect("triangular solve");
        let log_det_marginal = 2.0 * marginal_chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_marginal = -0.5 * whitened.norm_squared() - 0.5 * log_det_marginal - 0.5 * obs as f64 * (2.0 * PI).ln();

        // Posterior moments.
        let precision = forward.transpose() * &forward / noise_var + &prior_precision;
        let post_chol = precision
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("posterior precision is not positive definite".into()))?;
        let rhs = forward.transpose() * &data / noise_var + &prior_precision * &prior_mean;
        let posterior_mean = post_chol.solve(&rhs);
        let posterior_cov = post_chol.inverse();

        let sd0: Vec<f64> = prior_cov.diagonal().iter().map(|v| v.sqrt()).collect();
        let lower: Vec<f64> = prior_mean.iter().zip(&sd0).map(|(m, s)| m - box_sds * s).collect();
        let upper: Vec<f64> = prior_mean.iter().zip(&sd0).map(|(m, s)| m + box_sds * s).collect();
        let prior = PriorBox::new(lower, upper)?;

        let log_const = -0.5 * obs as f64 * (2.0 * PI * noise_var).ln() - 0.5 * (dim as f64 * (2.0 * PI).ln() + log_det_prior);

        Ok(Self {
            obs,
            forward: row_major(&forward),
            data: data.iter().copied().collect(),
            noise_var,
            prior_mean: prior_mean.iter().copied().collect(),
            prior_precision: row_major(&prior_precision),
            log_const,
            log_evidence: log_marginal - prior.log_volume(),
            posterior_mean: posterior_mean.iter().copied().collect(),
            posterior_sd: posterior_cov.diagonal().iter().map(|v| v.sqrt()).collect(),
            prior,
        })
    }

    /// A `side × side` pixel image seen through a Gaussian blur (PSF width
    /// `blur` pixels) with noise `noise_sd`. The prior has mean 0.5 and an
    /// exponential covariance `exp(−r/ℓ)` over pixel distance. Truth and noise
    /// are drawn from `seed`.
    pub fn blurred_image(side: usize, blur: f64, corr_len: f64, noise_sd: f64, seed: u64) -> Result<Self> {
        if side == 0 || !(blur > 0.0) || !(corr_len > 0.0) {
            return Err(Error::InvalidProblem("blurred image needs side ≥ 1 and positive widths".into()));
        }
        let dim = side * side;
        let coord = |k: usize| ((k / side) as f64, (k % side) as f64);
        let dist = |a: usize, b: usize| {
            let (ra, ca) = coord(a);
            let (rb, cb) = coord(b);
            ((ra - rb).powi(2) + (ca - cb).powi(2)).sqrt()
        };
        let prior_cov = DMatrix::from_fn(dim, dim, |i, j| (-dist(i, j) / corr_len).exp());
        let prior_mean = DVector::from_element(dim, 0.5);
        let mut forward = DMatrix::from_fn(dim, dim, |i, j| (-0.5 * (dist(i, j) / blur).powi(2)).exp());
        for mut row in forward.row_iter_mut() {
            let s: f64 = row.sum();
            row /= s;
        }

        let mut rng = seeded(seed);
        let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let chol = prior_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("prior covariance is not positive definite".into()))?;
        let truth = &prior_mean + chol.l() * z;
        let eps = DVector::from_fn(dim, |_, _| noise_sd * rng.sample::<f64, _>(StandardNormal));
        let data = &forward * truth + eps;
        Self::new(forward, data, noise_sd, prior_mean, prior_cov, 6.0)
    }

    /// The default 64-dimensional instance.
    pub fn standard() -> Result<Self> {
        Self::blurred_image(8, 0.8, 1.0, 0.2, 2024)
    }

    pub fn posterior_mean(&self) -> &[f64] {
        &self.posterior_mean
    }

    pub fn posterior_sd(&self) -> &[f64] {
        &self.posterior_sd
    }

    /// Data residual `y − Aθ` and prior offset `θ − μ₀`.
    fn residuals(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dim = theta.len();
        let resid: Vec<f64> = (0..self.obs)
            .map(|i| {
                let row = &self.forward[i * dim..(i + 1) * dim];
                self.data[i] - row.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>()
            })
            .collect();
        let delta: Vec<f64> = theta.iter().zip(&self.prior_mean).map(|(t, m)| t - m).collect();
        (resid, delta)
    }

    fn precision_times(&self, delta: &[f64]) -> Vec<f64> {
        let dim = delta.len();
        (0..dim)
            .map(|i| {
                self.prior_precision[i * dim..(i + 1) * dim]
                    .iter()
                    .zip(delta)
                    .map(|(p, d)| p * d)
                    .sum()
            })
            .collect()
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

impl TargetProblem for LinearGaussian {
    fn name(&self) -> &str {
        "linear-gaussian"
    }

    fn prior_box(&self) -> &PriorBox {
        &self.prior
    }

    fn log_like(&self, theta: &[f64]) -> f64 {
        let (resid, delta) = self.residuals(theta);
        let pd = self.precision_times(&delta);
        let data_term: f64 = resid.iter().map(|r| r * r).sum::<f64>() / self.noise_var;
        let prior_term: f64 = delta.iter().zip(&pd).map(|(a, b)| a * b).sum();
        self.log_const - 0.5 * (data_term + prior_term)
    }

    fn grad_log_like(&self, theta: &[f64], grad: &mut [f64]) {
        let dim = theta.len();
        let (resid, delta) = self.residuals(theta);
        let pd = self.precision_times(&delta);
        for (j, g) in grad.iter_mut().enumerate() {
            let mut back = 0.0;
            for (i, r) in resid.iter().enumerate() {
                back += self.forward[i * dim + j] * r;
            }
            *g = back / self.noise_var - pd[j];
        }
    }

    /// Exact up to the posterior mass outside the box, which the six-prior-sd
    /// box makes negligible.
    fn analytic_log_z(&self) -> Option<f64> {
        Some(self.log_evidence)
    }
}
