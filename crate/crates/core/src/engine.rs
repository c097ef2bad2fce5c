//! The outer nested-sampling loop.
//!
//! Each iteration kills the lowest `⌊n_live·kill_fraction⌋` live points one at
//! a time through the cluster moment recursion, then replaces them in a single
//! parallel HSS batch constrained by the highest killed likelihood. Clusters
//! are re-detected every iteration and new points are spawned into them in
//! proportion to their expected prior volume.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::{find_clusters, spawn_allocation, split_separation, ClusterMoments, MIN_SPLIT_SEPARATION};
use crate::error::{Error, Result};
use crate::evidence::{kl_divergence, DeadPoint, NSResult};
use crate::hss::{adapt_dt, evolve_batch, HssSettings};
use crate::problems::{eval_log_like, sample_prior, TargetProblem};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationMode {
    /// Stop once `X_i·L_i` of the killed points has fallen below `tol` times its maximum.
    PeakRelative,
    /// Stop once `L_max·X < tol`.
    LegacyRemainingMass,
}

impl fmt::Display for TerminationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationMode::PeakRelative => "peak_relative",
            TerminationMode::LegacyRemainingMass => "legacy_remaining_mass",
        })
    }
}

impl FromStr for TerminationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak_relative" | "peak-relative" | "peak" => Ok(TerminationMode::PeakRelative),
            "legacy_remaining_mass" | "legacy-remaining-mass" | "legacy" => Ok(TerminationMode::LegacyRemainingMass),
            other => Err(Error::InvalidConfig(format!("unknown termination mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NSConfig {
    pub n_live: usize,
    pub tol: f64,
    pub min_ref: usize,
    pub max_ref: usize,
    /// Per-step momentum noise, relative to the momentum scale per component.
    pub delta_p: f64,
    pub dt_ini: f64,
    pub kill_fraction: f64,
    /// Consecutive out-of-slice steps before a particle is sent home.
    pub prune_patience: usize,
    pub clustering_enabled: bool,
    pub adaptive_dt: bool,
    pub termination_mode: TerminationMode,
    /// Fixed trajectory length; replaces the reflection-count stopping rule.
    pub fixed_steps: Option<usize>,
    pub seed: u64,
    /// Trajectory restarts allowed per particle before the run aborts.
    pub max_restarts: usize,
    /// Hard cap on steps per trajectory attempt.
    pub max_steps: usize,
    pub max_iterations: usize,
}

impl Default for NSConfig {
    fn default() -> Self {
        Self {
            n_live: 200,
            tol: 0.01,
            min_ref: 1,
            max_ref: 3,
            delta_p: 0.2,
            dt_ini: 0.1,
            kill_fraction: 0.5,
            prune_patience: 20,
            clustering_enabled: true,
            adaptive_dt: true,
            termination_mode: TerminationMode::PeakRelative,
            fixed_steps: None,
            seed: 0,
            max_restarts: 100,
            max_steps: 100_000,
            max_iterations: 1_000_000,
        }
    }
}

impl NSConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_live < 2 {
            return bad(format!("n_live must be at least 2, got {}", self.n_live));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.fixed_steps.is_none() && !(1 <= self.min_ref && self.min_ref < self.max_ref) {
            return bad(format!(
                "need 1 <= min_ref < max_ref, got min_ref={} max_ref={}",
                self.min_ref, self.max_ref
            ));
        }
        if self.fixed_steps == Some(0) {
            return bad("fixed_steps must be positive".into());
        }
        if !(self.kill_fraction > 0.0 && self.kill_fraction <= 0.5) {
            return bad(format!("kill_fraction must lie in (0, 0.5], got {}", self.kill_fraction));
        }
        if !(self.dt_ini > 0.0 && self.dt_ini.is_finite()) {
            return bad(format!("dt_ini must be positive, got {}", self.dt_ini));
        }
        if !(self.delta_p >= 0.0 && self.delta_p.is_finite()) {
            return bad(format!("delta_p must be non-negative, got {}", self.delta_p));
        }
        if self.max_steps == 0 || self.max_iterations == 0 {
            return bad("max_steps and max_iterations must be positive".into());
        }
        Ok(())
    }

    /// Points killed (and respawned) per iteration.
    pub fn n_kill(&self) -> usize {
        ((self.n_live as f64 * self.kill_fraction).floor() as usize).max(1)
    }
}

/// One row of the per-iteration diagnostics stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_clusters: usize,
    pub dt: f64,
    pub out_frac: f64,
    /// `ln(X_i L_i) − max ln(X_i L_i)` at the latest kill.
    pub log_delta_xl: f64,
    pub log_x: f64,
    pub log_like_max: f64,
    pub barrier: f64,
    pub log_z: f64,
    pub n_like_calls: u64,
}

/// Where the run stands after an iteration, in logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    /// Total live prior volume `Σ X̄_p`.
    pub log_x: f64,
    /// Best live log-likelihood.
    pub log_like_max: f64,
    /// `X_i L_i` of the most recent kill, with `X_i` the total volume after it.
    pub log_xl: f64,
    /// Running maximum of `log_xl` over all kills.
    pub log_xl_max: f64,
}

/// Whether the run should stop.
///
/// Peak-relative mode stops once `X_i L_i` of the latest kill has fallen
/// below `tol` times its maximum over the run. Legacy mode stops once
/// `L_max·X < tol`, with `L_max` the best live likelihood.
pub fn termination_check(cfg: &NSConfig, progress: &Progress) -> bool {
    match cfg.termination_mode {
        TerminationMode::PeakRelative => progress.log_xl - progress.log_xl_max < cfg.tol.ln(),
        TerminationMode::LegacyRemainingMass => progress.log_x + progress.log_like_max < cfg.tol.ln(),
    }
}

struct LivePoint {
    position: Vec<f64>,
    log_like: f64,
    cluster: usize,
}

pub fn run<P: TargetProblem + ?Sized>(problem: &P, cfg: &NSConfig) -> Result<NSResult> {
    run_with_observer(problem, cfg, |_| {})
}

/// Like [`run`], calling `observer` after every iteration.
pub fn run_with_observer<P, F>(problem: &P, cfg: &NSConfig, mut observer: F) -> Result<NSResult>
where
    P: TargetProblem + ?Sized,
    F: FnMut(&IterationRecord),
{
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = seeded(cfg.seed);
    let n_kill = cfg.n_kill();

    let positions = sample_prior(problem, cfg.n_live, &mut rng);
    let log_likes = positions
        .par_iter()
        .map(|x| eval_log_like(problem, x))
        .collect::<Result<Vec<f64>>>()?;
    let mut n_like_calls = cfg.n_live as u64;
    let mut live: Vec<LivePoint> = positions
        .into_iter()
        .zip(log_likes)
        .map(|(position, log_like)| LivePoint {
            position,
            log_like,
            cluster: 0,
        })
        .collect();

    let mut moments = ClusterMoments::init(cfg.n_live);
    let mut dead: Vec<DeadPoint> = Vec::new();
    let mut trace = Vec::new();
    let mut dt = cfg.dt_ini;
    let mut log_xl_max = f64::NEG_INFINITY;
    let mut log_xl = f64::NEG_INFINITY;
    let mut max_clusters = 1;
    let mut iteration = 0;
    let mut converged = false;

    while iteration < cfg.max_iterations {
        iteration += 1;

        if cfg.clustering_enabled {
            split_clusters(&mut live, &mut moments)?;
            max_clusters = max_clusters.max(moments.n_clusters());
        }

        // Kill the lowest points in likelihood order; ties go to the earlier entry.
        let mut order: Vec<usize> = (0..live.len()).collect();
        order.sort_by(|&a, &b| live[a].log_like.total_cmp(&live[b].log_like).then(a.cmp(&b)));
        let mut killed = vec![false; live.len()];
        let mut barrier = f64::NEG_INFINITY;
        for &i in order.iter().take(n_kill) {
            let point = &live[i];
            let p = moments
                .index_of(point.cluster)
                .ok_or_else(|| Error::Contract(format!("live point in unknown cluster {}", point.cluster)))?;
            let kv = moments.kill_update(p, point.log_like)?;
            dead.push(DeadPoint {
                position: point.position.clone(),
                log_like: point.log_like,
                log_x: moments.clusters()[p].log_x,
                log_w: kv.log_x_before - ((kv.n_before + 1) as f64).ln(),
                cluster: point.cluster,
            });
            killed[i] = true;
            barrier = point.log_like;
            log_xl = moments.log_x_total() + point.log_like;
            log_xl_max = log_xl_max.max(log_xl);
        }
        let mut k = 0;
        live.retain(|_| {
            k += 1;
            !killed[k - 1]
        });
        moments.remove_empty();

        // Respawn from surviving members of clusters drawn by volume.
        let alloc = spawn_allocation(&moments, n_kill, &mut rng)?;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); moments.n_clusters()];
        for (i, point) in live.iter().enumerate() {
            if let Some(p) = moments.index_of(point.cluster) {
                members[p].push(i);
            }
        }
        let mut starts = Vec::with_capacity(n_kill);
        let mut start_log_likes = Vec::with_capacity(n_kill);
        let mut decks: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
        for &p in &alloc {
            if decks[p].is_empty() {
                decks[p] = members[p].clone();
                decks[p].shuffle(&mut rng);
            }
            let pick = decks[p].pop().expect("refilled above");
            starts.push(live[pick].position.clone());
            start_log_likes.push(live[pick].log_like);
        }
        let settings = HssSettings::from_config(cfg, barrier, dt);
        let outcome = evolve_batch(&starts, &start_log_likes, problem, &settings, rng.random())?;
        n_like_calls += outcome.stats.like_calls;
        for ((position, log_like), &p) in outcome.points.into_iter().zip(outcome.log_likes).zip(&alloc) {
            let cluster = moments.clusters()[p].id;
            moments.add_points(p, 1);
            live.push(LivePoint {
                position,
                log_like,
                cluster,
            });
        }

        if cfg.adaptive_dt {
            dt = adapt_dt(dt, outcome.out_frac);
        }

        let log_x = moments.log_x_total();
        let log_like_max = live.iter().map(|l| l.log_like).fold(f64::NEG_INFINITY, f64::max);
        let progress = Progress {
            log_x,
            log_like_max,
            log_xl,
            log_xl_max,
        };
        let record = IterationRecord {
            iteration,
            n_clusters: moments.n_clusters(),
            dt,
            out_frac: outcome.out_frac,
            log_delta_xl: log_xl - log_xl_max,
            log_x,
            log_like_max,
            barrier,
            log_z: moments.log_z(),
            n_like_calls,
        };
        observer(&record);
        trace.push(record);

        if termination_check(cfg, &progress) {
            converged = true;
            break;
        }
    }

    // Consume the remaining live points at a constant population.
    live.sort_by(|a, b| a.log_like.total_cmp(&b.log_like));
    let mut pooled = moments.pool();
    for point in &live {
        let p = moments
            .index_of(point.cluster)
            .ok_or_else(|| Error::Contract(format!("live point in unknown cluster {}", point.cluster)))?;
        let log_x_before = moments.final_kill(&mut pooled, p, point.log_like, cfg.n_live);
        dead.push(DeadPoint {
            position: point.position.clone(),
            log_like: point.log_like,
            log_x: pooled.log_x,
            log_w: log_x_before - ((cfg.n_live + 1) as f64).ln(),
            cluster: point.cluster,
        });
    }

    let d_kl = kl_divergence(&dead)?;
    Ok(NSResult {
        problem: problem.name().to_string(),
        dim: problem.dim(),
        config: cfg.clone(),
        log_z: moments.log_z(),
        log_z_err_moments: moments.log_z_sigma(),
        log_z_err_kl: (d_kl.max(0.0) / cfg.n_live as f64).sqrt(),
        d_kl,
        n_like_calls,
        iterations: iteration,
        converged,
        cluster_log_z: moments.cluster_log_z(),
        max_clusters,
        dead,
        trace,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Runs mode detection on every cluster and splits those that separate.
fn split_clusters(live: &mut [LivePoint], moments: &mut ClusterMoments) -> Result<()> {
    let ids: Vec<usize> = moments.clusters().iter().map(|c| c.id).collect();
    let groups: Vec<Vec<usize>> = ids
        .iter()
        .map(|&id| (0..live.len()).filter(|&i| live[i].cluster == id).collect())
        .collect();
    // A partition is kept only if its pieces are separated by a clear gap.
    let partitions: Vec<Option<Vec<usize>>> = groups
        .par_iter()
        .map(|members| {
            let points: Vec<Vec<f64>> = members.iter().map(|&i| live[i].position.clone()).collect();
            let labels = find_clusters(&points);
            (split_separation(&points, &labels) >= MIN_SPLIT_SEPARATION).then_some(labels)
        })
        .collect();

    for ((id, members), labels) in ids.into_iter().zip(groups).zip(partitions) {
        let Some(labels) = labels else { continue };
        let m = labels.iter().max().map_or(0, |l| l + 1);
        if m < 2 {
            continue;
        }
        let mut sizes = vec![0; m];
        for &l in &labels {
            sizes[l] += 1;
        }
        let p = moments
            .index_of(id)
            .ok_or_else(|| Error::Contract(format!("cluster {id} vanished during splitting")))?;
        let children = moments.split(p, &sizes)?;
        let child_ids: Vec<usize> = children.iter().map(|&c| moments.clusters()[c].id).collect();
        for (&i, &l) in members.iter().zip(&labels) {
            live[i].cluster = child_ids[l];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = NSConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_kill(), 100);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = NSConfig::default();
        for cfg in [
            NSConfig { tol: 0.0, ..base.clone() },
            NSConfig { tol: 1.0, ..base.clone() },
            NSConfig { min_ref: 3, ..base.clone() },
            NSConfig { min_ref: 0, ..base.clone() },
            NSConfig { kill_fraction: 0.6, ..base.clone() },
            NSConfig { dt_ini: 0.0, ..base.clone() },
            NSConfig { fixed_steps: Some(0), ..base.clone() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn fixed_steps_lift_the_reflection_ordering() {
        let cfg = NSConfig {
            fixed_steps: Some(20),
            min_ref: 3,
            max_ref: 3,
            ..NSConfig::default()
        };
        cfg.validate().unwrap();
    }

    fn progress(log_x: f64, log_like_max: f64, log_xl: f64, log_xl_max: f64) -> Progress {
        Progress {
            log_x,
            log_like_max,
            log_xl,
            log_xl_max,
        }
    }

    #[test]
    fn peak_relative_ratio_test() {
        let cfg = NSConfig::default();
        assert!(termination_check(&cfg, &progress(0.0, 0.0, 0.0, 5.0)));
        assert!(!termination_check(&cfg, &progress(0.0, 0.0, 0.0, 0.0)));
        assert!(!termination_check(&cfg, &progress(0.0, 0.0, 4.0, 5.0)));
    }

    #[test]
    fn peak_relative_ignores_likelihood_scale() {
        let cfg = NSConfig::default();
        for shift in [-300.0, 0.0, 250.0] {
            assert!(termination_check(&cfg, &progress(-9.0, 1.0 + shift, -6.0 + shift, -1.0 + shift)));
            assert!(!termination_check(&cfg, &progress(-9.0, 1.0 + shift, -3.0 + shift, -1.0 + shift)));
        }
    }

    #[test]
    fn legacy_uses_the_raw_product() {
        let cfg = NSConfig {
            termination_mode: TerminationMode::LegacyRemainingMass,
            ..NSConfig::default()
        };
        assert!(termination_check(&cfg, &progress(-10.0, 0.0, 0.0, 100.0)));
        assert!(!termination_check(&cfg, &progress(-1.0, 0.0, -100.0, 0.0)));
    }

    #[test]
    fn termination_mode_round_trip() {
        for mode in [TerminationMode::PeakRelative, TerminationMode::LegacyRemainingMass] {
            assert_eq!(mode.to_string().parse::<TerminationMode>().unwrap(), mode);
        }
        assert!("sometimes".parse::<TerminationMode>().is_err());
    }
}
