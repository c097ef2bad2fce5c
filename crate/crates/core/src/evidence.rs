//! Post-run analysis of the dead-point archive.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::Serialize;

use crate::engine::{IterationRecord, NSConfig};
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// An archived killed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadPoint {
    pub position: Vec<f64>,
    pub log_like: f64,
    /// Prior volume of the point's cluster right after the kill.
    pub log_x: f64,
    /// Prior-volume shell `X_before − X_after`.
    pub log_w: f64,
    pub cluster: usize,
}

impl DeadPoint {
    /// Unnormalized posterior mass `ln(L·w)`.
    pub fn log_mass(&self) -> f64 {
        self.log_like + self.log_w
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NSResult {
    pub problem: String,
    pub dim: usize,
    pub config: NSConfig,
    /// In kill order, final sweep included.
    pub dead: Vec<DeadPoint>,
    /// `ln Z̄` from the moment recursion.
    pub log_z: f64,
    /// `√(Z̄² − Z̄²)/Z̄`.
    pub log_z_err_moments: f64,
    /// `√(D_KL/n_live)`.
    pub log_z_err_kl: f64,
    pub d_kl: f64,
    pub n_like_calls: u64,
    pub iterations: usize,
    /// False when the iteration cap was hit before termination.
    pub converged: bool,
    /// `(cluster id, ln Z̄_p)` for every cluster that ever existed at the end.
    pub cluster_log_z: Vec<(usize, f64)>,
    pub max_clusters: usize,
    pub trace: Vec<IterationRecord>,
    pub wall_time_s: f64,
}

impl NSResult {
    /// `ln Σ Lᵢwᵢ` recomputed from the archive.
    pub fn archive_log_z(&self) -> f64 {
        let masses: Vec<f64> = self.dead.iter().map(DeadPoint::log_mass).collect();
        log_sum_exp(&masses)
    }

    /// Normalized posterior weights `pᵢ = Lᵢwᵢ/Z`.
    pub fn posterior_weights(&self) -> Result<Vec<f64>> {
        posterior_weights(&self.dead)
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.dead.iter().map(|d| d.position.clone()).collect()
    }
}

/// `pᵢ = Lᵢwᵢ / Σⱼ Lⱼwⱼ`, normalized against the archive itself.
pub fn posterior_weights(dead: &[DeadPoint]) -> Result<Vec<f64>> {
    let masses: Vec<f64> = dead.iter().map(DeadPoint::log_mass).collect();
    let log_total = log_sum_exp(&masses);
    if !log_total.is_finite() {
        return Err(Error::Contract("dead archive carries no posterior mass".into()));
    }
    Ok(masses.iter().map(|m| (m - log_total).exp()).collect())
}

/// `(ln Z, σ_moments, σ_kl)`.
pub fn log_evidence(result: &NSResult) -> Result<(f64, f64, f64)> {
    if result.dead.is_empty() {
        return Err(Error::Contract("empty dead archive".into()));
    }
    if !result.log_z.is_finite() {
        return Err(Error::Contract("evidence is zero".into()));
    }
    Ok((result.log_z, result.log_z_err_moments, result.log_z_err_kl))
}

/// `D_KL = Σ pᵢ (ln Lᵢ − ln Z)` with `Z` taken from the archive.
pub fn kl_divergence(dead: &[DeadPoint]) -> Result<f64> {
    let masses: Vec<f64> = dead.iter().map(DeadPoint::log_mass).collect();
    let log_z = log_sum_exp(&masses);
    let weights = posterior_weights(dead)?;
    Ok(dead
        .iter()
        .zip(&weights)
        .filter(|(_, &p)| p > 0.0)
        .map(|(d, p)| p * (d.log_like - log_z))
        .sum())
}

/// Multinomial bootstrap of `count` equally weighted positions.
pub fn resample_equal<R: Rng + ?Sized>(dead: &[DeadPoint], count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let weights = posterior_weights(dead)?;
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::Contract(format!("posterior weights: {e}")))?;
    Ok((0..count).map(|_| dead[dist.sample(rng)].position.clone()).collect())
}

/// Number of `centers` with at least one sample within distance `radius`.
pub fn mode_coverage(samples: &[Vec<f64>], centers: &[Vec<f64>], radius: f64) -> usize {
    let r2 = radius * radius;
    centers
        .iter()
        .filter(|c| {
            samples
                .iter()
                .any(|s| s.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
        })
        .count()
}

/// Weighted mean and Kish effective sample size.
pub fn weighted_mean(dead: &[DeadPoint]) -> Result<(Vec<f64>, f64)> {
    let weights = posterior_weights(dead)?;
    let dim = dead.first().map_or(0, |d| d.position.len());
    let mut mean = vec![0.0; dim];
    for (d, p) in dead.iter().zip(&weights) {
        for (m, x) in mean.iter_mut().zip(&d.position) {
            *m += p * x;
        }
    }
    let ess = 1.0 / weights.iter().map(|p| p * p).sum::<f64>();
    Ok((mean, ess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn point(x: f64, log_like: f64, log_w: f64) -> DeadPoint {
        DeadPoint {
            position: vec![x],
            log_like,
            log_x: 0.0,
            log_w,
            cluster: 0,
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let dead: Vec<DeadPoint> = (0..50).map(|i| point(i as f64, -(i as f64) * 0.3, -(i as f64) * 0.1)).collect();
        let sum: f64 = posterior_weights(&dead).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_likelihood_weights_follow_shells() {
        let dead: Vec<DeadPoint> = (1..20).map(|i| point(0.0, 3.0, -(i as f64))).collect();
        let p = posterior_weights(&dead).unwrap();
        for k in 1..p.len() {
            assert!((p[k] / p[k - 1] - (-1.0f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_likelihood_has_zero_kl() {
        // Shells of a complete archive tile the unit volume.
        let dead: Vec<DeadPoint> = (0..30).map(|_| point(0.0, 3.0, -(30.0f64).ln())).collect();
        assert!(kl_divergence(&dead).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kl_is_invariant_to_likelihood_scale() {
        let dead: Vec<DeadPoint> = (0..40).map(|i| point(0.0, (i as f64).sin(), -(i as f64) * 0.05)).collect();
        let shifted: Vec<DeadPoint> = dead.iter().map(|d| point(0.0, d.log_like + 7.5, d.log_w)).collect();
        let a = kl_divergence(&dead).unwrap();
        let b = kl_divergence(&shifted).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn degenerate_archive_is_rejected() {
        let dead = vec![point(0.0, f64::NEG_INFINITY, 0.0)];
        assert!(posterior_weights(&dead).is_err());
    }

    #[test]
    fn resampling_a_spike() {
        let dead = vec![point(1.0, 0.0, 0.0), point(2.0, -1e4, 0.0), point(3.0, -1e4, 0.0)];
        let draws = resample_equal(&dead, 100, &mut seeded(1)).unwrap();
        assert!(draws.iter().all(|d| d[0] == 1.0));
    }

    #[test]
    fn resampling_count() {
        let dead: Vec<DeadPoint> = (0..10).map(|i| point(i as f64, 0.0, 0.0)).collect();
        assert_eq!(resample_equal(&dead, 2715, &mut seeded(1)).unwrap().len(), 2715);
    }

    #[test]
    fn resampled_moments_match_weighted_moments() {
        let dead: Vec<DeadPoint> = (0..200)
            .map(|i| {
                let x = i as f64 / 20.0;
                point(x, -0.5 * (x - 4.0) * (x - 4.0), -(i as f64) * 0.01)
            })
            .collect();
        let p = posterior_weights(&dead).unwrap();
        let mean: f64 = dead.iter().zip(&p).map(|(d, w)| w * d.position[0]).sum();
        let second: f64 = dead.iter().zip(&p).map(|(d, w)| w * d.position[0].powi(2)).sum();
        let sd = (second - mean * mean).sqrt();
        let m = 100_000;
        let draws = resample_equal(&dead, m, &mut seeded(8)).unwrap();
        let est = draws.iter().map(|d| d[0]).sum::<f64>() / m as f64;
        assert!((est - mean).abs() < 3.0 * sd / (m as f64).sqrt());
        let est2 = draws.iter().map(|d| d[0] * d[0]).sum::<f64>() / m as f64;
        let fourth: f64 = dead.iter().zip(&p).map(|(d, w)| w * d.position[0].powi(4)).sum();
        assert!((est2 - second).abs() < 3.0 * ((fourth - second * second) / m as f64).sqrt());
    }

    #[test]
    fn coverage_counts() {
        let centers: Vec<Vec<f64>> = (-1..=1)
            .flat_map(|i| (-1..=1).map(move |j| vec![5.0 * i as f64, 5.0 * j as f64]))
            .collect();
        assert_eq!(mode_coverage(&centers, &centers, 0.3), 9);
        assert_eq!(mode_coverage(&[vec![2.5, 2.5]], &centers, 0.3), 0);
        assert_eq!(mode_coverage(&[vec![5.1, -4.9]], &centers, 0.3), 1);
    }
}
