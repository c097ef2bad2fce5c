//! Batch Hamiltonian slice sampling inside a hard likelihood constraint.
//!
//! Each particle flies in straight lines `x ← x + p·dt`. When a step lands
//! outside the slice `{θ : log L(θ) ≥ barrier}` the momentum is reflected off
//! the iso-likelihood surface using the score direction. A batch of particles
//! moves together: in-slice positions are recorded once every particle has
//! reflected `min_ref` times, the batch stops once every particle has
//! reflected `max_ref` times, and each new live point is a uniform draw from
//! its particle's recorded positions.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::engine::NSConfig;
use crate::error::{Error, Result};
use crate::problems::{eval_log_like, TargetProblem};
use crate::rng::{particle_stream, RunRng};

/// One trajectory walker.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub log_like: f64,
    pub num_reflections: usize,
    /// `log_like < barrier` at the last step.
    pub outside: bool,
    /// Consecutive steps spent outside the slice.
    pub steps_outside: usize,
    /// Start position, used as the reset target when pruned.
    pub origin: Vec<f64>,
    origin_log_like: f64,
}

impl Particle {
    pub fn new<R: Rng + ?Sized>(origin: Vec<f64>, log_like: f64, rng: &mut R) -> Self {
        let momentum = fresh_momentum(origin.len(), rng);
        Self {
            position: origin.clone(),
            momentum,
            log_like,
            num_reflections: 0,
            outside: false,
            steps_outside: 0,
            origin,
            origin_log_like: log_like,
        }
    }

    fn reset_to_origin<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.position.copy_from_slice(&self.origin);
        self.momentum = fresh_momentum(self.origin.len(), rng);
        self.log_like = self.origin_log_like;
        self.outside = false;
        self.steps_outside = 0;
    }
}

/// Uniformly random direction with norm `√d`, the typical length of a
/// standard normal vector. A fixed speed keeps every particle covering the
/// same distance per step, so no slow particle holds back the batch.
pub fn fresh_momentum<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = (dim as f64).sqrt() / norm;
            v.iter_mut().for_each(|x| *x *= scale);
            return v;
        }
    }
}

/// In-slice positions recorded along one particle's trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryBuffer {
    dim: usize,
    positions: Vec<f64>,
    log_likes: Vec<f64>,
}

impl TrajectoryBuffer {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            positions: Vec::new(),
            log_likes: Vec::new(),
        }
    }

    pub fn push(&mut self, position: &[f64], log_like: f64) {
        debug_assert_eq!(position.len(), self.dim);
        self.positions.extend_from_slice(position);
        self.log_likes.push(log_like);
    }

    pub fn len(&self) -> usize {
        self.log_likes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_likes.is_empty()
    }

    pub fn get(&self, i: usize) -> (&[f64], f64) {
        (&self.positions[i * self.dim..(i + 1) * self.dim], self.log_likes[i])
    }

    pub fn last(&self) -> Option<(&[f64], f64)> {
        self.len().checked_sub(1).map(|i| self.get(i))
    }

    /// Uniform draw over the stored positions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(&[f64], f64)> {
        if self.is_empty() {
            None
        } else {
            Some(self.get(rng.random_range(0..self.len())))
        }
    }
}

/// Specular reflection `p − 2(p·n̂)n̂` with `n̂ = grad/‖grad‖`.
///
/// Returns `None` when the gradient has zero norm, in which case no
/// reflection is possible.
pub fn reflect(momentum: &[f64], grad: &[f64]) -> Option<Vec<f64>> {
    let mut p = momentum.to_vec();
    reflect_in_place(&mut p, grad).then_some(p)
}

fn reflect_in_place(p: &mut [f64], grad: &[f64]) -> bool {
    let norm2: f64 = grad.iter().map(|g| g * g).sum();
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return false;
    }
    let norm = norm2.sqrt();
    let proj: f64 = p.iter().zip(grad).map(|(a, g)| a * g / norm).sum();
    for (a, g) in p.iter_mut().zip(grad) {
        *a -= 2.0 * proj * g / norm;
    }
    true
}

/// Step-size control from the fraction of out-of-slice steps.
pub fn adapt_dt(dt: f64, out_frac: f64) -> f64 {
    if out_frac > 0.15 {
        dt * 0.9
    } else if out_frac < 0.05 {
        dt * 1.1
    } else {
        dt
    }
}

/// Resets every particle that has spent more than `patience` consecutive
/// steps outside the slice: back to its origin with a fresh momentum. The
/// reflection count is kept. Returns how many were reset.
pub fn prune<R: Rng + ?Sized>(particles: &mut [Particle], patience: usize, rng: &mut R) -> usize {
    let mut pruned = 0;
    for particle in particles.iter_mut() {
        if particle.steps_outside > patience {
            particle.reset_to_origin(rng);
            pruned += 1;
        }
    }
    pruned
}

/// Per-batch settings, fixed for the duration of one `evolve_batch`.
#[derive(Debug, Clone)]
pub struct HssSettings {
    pub barrier: f64,
    pub dt: f64,
    pub min_ref: usize,
    pub max_ref: usize,
    pub delta_p: f64,
    pub prune_patience: usize,
    pub max_restarts: usize,
    pub max_steps: usize,
    pub fixed_steps: Option<usize>,
}

impl HssSettings {
    pub fn from_config(cfg: &NSConfig, barrier: f64, dt: f64) -> Self {
        Self {
            barrier,
            dt,
            min_ref: cfg.min_ref,
            max_ref: cfg.max_ref,
            delta_p: cfg.delta_p,
            prune_patience: cfg.prune_patience,
            max_restarts: cfg.max_restarts,
            max_steps: cfg.max_steps,
            fixed_steps: cfg.fixed_steps,
        }
    }
}

/// Counters summed over a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct BatchStats {
    pub steps_in: u64,
    pub steps_out: u64,
    /// One per position update; equals `steps_in + steps_out`.
    pub like_calls: u64,
    pub reflections: u64,
    pub wall_hits: u64,
    pub prunes: u64,
    pub restarts: u64,
    pub zero_gradients: u64,
    pub capped: u64,
}

impl BatchStats {
    fn merge(&mut self, other: &BatchStats) {
        self.steps_in += other.steps_in;
        self.steps_out += other.steps_out;
        self.like_calls += other.like_calls;
        self.reflections += other.reflections;
        self.wall_hits += other.wall_hits;
        self.prunes += other.prunes;
        self.restarts += other.restarts;
        self.zero_gradients += other.zero_gradients;
        self.capped += other.capped;
    }

    pub fn out_frac(&self) -> f64 {
        let total = self.steps_in + self.steps_out;
        if total == 0 {
            0.0
        } else {
            self.steps_out as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub points: Vec<Vec<f64>>,
    pub log_likes: Vec<f64>,
    pub out_frac: f64,
    pub stats: BatchStats,
}

/// Steps taken by every walker between batch-level checks.
const CHUNK: usize = 8;

/// Evolves one particle per start and returns one new in-slice point each.
///
/// The batch moves in lockstep. Recording opens once every particle has at
/// least `min_ref` reflections and the batch stops once every particle has
/// `max_ref`; each particle then returns a uniform draw over the in-slice
/// positions it visited inside that window. Both edges are checked every few
/// steps for the whole batch, so a particle's window does not start or end on
/// one of its own reflections. A particle that recorded nothing is re-run on
/// its own, with restarts. With `fixed_steps` every particle runs that many
/// steps independently and returns its last in-slice position.
///
/// Particle `i` draws from its own RNG stream keyed by `(batch_seed, i)`, so
/// the outcome does not depend on the rayon pool size.
pub fn evolve_batch<P: TargetProblem + ?Sized>(
    starts: &[Vec<f64>],
    start_log_likes: &[f64],
    problem: &P,
    settings: &HssSettings,
    batch_seed: u64,
) -> Result<BatchOutcome> {
    if starts.len() != start_log_likes.len() {
        return Err(Error::Contract("one log-likelihood per start is required".into()));
    }
    if settings.fixed_steps.is_none() && settings.min_ref >= settings.max_ref {
        return Err(Error::InvalidConfig(format!(
            "min_ref ({}) must be below max_ref ({})",
            settings.min_ref, settings.max_ref
        )));
    }
    if let Some(i) = start_log_likes.iter().position(|&l| l < settings.barrier) {
        return Err(Error::Contract(format!(
            "start {i} has log-likelihood {} below the barrier {}",
            start_log_likes[i], settings.barrier
        )));
    }

    let dim = starts.first().map_or(0, Vec::len);
    let mut walkers: Vec<Walker> = starts
        .iter()
        .zip(start_log_likes)
        .enumerate()
        .map(|(i, (start, &ll))| {
            let mut rng = particle_stream(batch_seed, i);
            Walker {
                particle: Particle::new(start.clone(), ll, &mut rng),
                rng,
                grad: vec![0.0; dim],
                stats: BatchStats::default(),
                chosen: None,
                seen: 0,
            }
        })
        .collect();

    if settings.fixed_steps.is_none() {
        run_lockstep(&mut walkers, problem, settings)?;
    }

    let results: Vec<Result<(Vec<f64>, f64, BatchStats)>> = walkers
        .into_par_iter()
        .enumerate()
        .map(|(i, mut w)| match w.chosen.take() {
            Some((x, ll)) => Ok((x, ll, w.stats)),
            None => {
                let origin = w.particle.origin.clone();
                let (x, ll, s) = evolve_particle(i, origin, w.particle.origin_log_like, problem, settings, &mut w.rng)?;
                w.stats.merge(&s);
                Ok((x, ll, w.stats))
            }
        })
        .collect();

    let mut points = Vec::with_capacity(starts.len());
    let mut log_likes = Vec::with_capacity(starts.len());
    let mut stats = BatchStats::default();
    for r in results {
        let (point, ll, s) = r?;
        points.push(point);
        log_likes.push(ll);
        stats.merge(&s);
    }
    Ok(BatchOutcome {
        points,
        log_likes,
        out_frac: stats.out_frac(),
        stats,
    })
}

struct Walker {
    particle: Particle,
    rng: RunRng,
    grad: Vec<f64>,
    stats: BatchStats,
    /// Single-item reservoir over the in-window, in-slice positions.
    chosen: Option<(Vec<f64>, f64)>,
    seen: u64,
}

fn run_lockstep<P: TargetProblem + ?Sized>(walkers: &mut [Walker], problem: &P, s: &HssSettings) -> Result<()> {
    let mut steps = 0;
    loop {
        if walkers.iter().all(|w| w.particle.num_reflections >= s.max_ref) {
            return Ok(());
        }
        if steps >= s.max_steps {
            for w in walkers.iter_mut() {
                w.stats.capped += 1;
            }
            return Ok(());
        }
        let recording = walkers.iter().all(|w| w.particle.num_reflections >= s.min_ref);
        let chunk = CHUNK.min(s.max_steps - steps);
        walkers.par_iter_mut().try_for_each(|w| -> Result<()> {
            for _ in 0..chunk {
                let inside = step(&mut w.particle, problem, s, &mut w.grad, &mut w.stats, &mut w.rng)?;
                if recording && inside {
                    w.seen += 1;
                    if w.rng.random_range(0..w.seen) == 0 {
                        w.chosen = Some((w.particle.position.clone(), w.particle.log_like));
                    }
                }
            }
            Ok(())
        })?;
        steps += chunk;
    }
}

/// Runs a single particle on its own: recording after `min_ref` reflections
/// and stopping at `max_ref` (or after `fixed_steps`), restarting from its
/// origin when nothing was recorded.
fn evolve_particle<P: TargetProblem + ?Sized>(
    index: usize,
    start: Vec<f64>,
    start_log_like: f64,
    problem: &P,
    s: &HssSettings,
    rng: &mut RunRng,
) -> Result<(Vec<f64>, f64, BatchStats)> {
    let dim = start.len();
    let mut stats = BatchStats::default();
    let mut particle = Particle::new(start, start_log_like, rng);
    let mut grad = vec![0.0; dim];
    let mut restarts = 0;

    loop {
        let mut buffer = TrajectoryBuffer::new(dim);
        let mut steps = 0;
        loop {
            let done = match s.fixed_steps {
                Some(n) => steps >= n,
                None => particle.num_reflections >= s.max_ref,
            };
            if done {
                break;
            }
            if steps >= s.max_steps {
                stats.capped += 1;
                break;
            }
            let inside = step(&mut particle, problem, s, &mut grad, &mut stats, rng)?;
            if inside && (s.fixed_steps.is_some() || particle.num_reflections >= s.min_ref) {
                buffer.push(&particle.position, particle.log_like);
            }
            steps += 1;
        }

        let chosen = if s.fixed_steps.is_some() {
            buffer.last()
        } else {
            buffer.sample(rng)
        };
        if let Some((x, ll)) = chosen {
            return Ok((x.to_vec(), ll, stats));
        }

        restarts += 1;
        stats.restarts += 1;
        if restarts > s.max_restarts {
            return Err(Error::RestartsExhausted {
                particle: index,
                restarts: s.max_restarts,
                barrier: s.barrier,
            });
        }
        particle.reset_to_origin(rng);
        particle.num_reflections = 0;
    }
}

/// Perturbs the direction of `p` by isotropic Gaussian noise of relative
/// size `delta_p` per component, keeping `‖p‖` fixed.
///
/// Per-component multiplicative noise `pᵢ ← pᵢ(1 + εᵢδ)` has the same
/// per-component scale but is not rotation invariant; combined with
/// reflections off curved slice boundaries it no longer leaves the uniform
/// distribution on the slice invariant, and live points drift inwards.
pub fn jitter_direction<R: Rng + ?Sized>(p: &mut [f64], delta_p: f64, rng: &mut R) {
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return;
    }
    let scale = delta_p * norm / (p.len() as f64).sqrt();
    for v in p.iter_mut() {
        *v += scale * rng.sample::<f64, _>(StandardNormal);
    }
    let new_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in p.iter_mut() {
        *v *= norm / new_norm;
    }
}

/// Advances one particle by one step. Returns whether it ended inside the slice.
fn step<P: TargetProblem + ?Sized>(
    particle: &mut Particle,
    problem: &P,
    s: &HssSettings,
    grad: &mut [f64],
    stats: &mut BatchStats,
    rng: &mut RunRng,
) -> Result<bool> {
    for (x, p) in particle.position.iter_mut().zip(&particle.momentum) {
        *x += p * s.dt;
    }
    let prior = problem.prior_box();
    if problem.periodic() {
        prior.wrap_into(&mut particle.position);
    } else {
        let hits = prior.reflect_into(&mut particle.position, &mut particle.momentum);
        if hits > 0 {
            // The box walls bound the slice too.
            particle.num_reflections += 1;
            stats.wall_hits += hits as u64;
        }
    }

    let ll = eval_log_like(problem, &particle.position)?;
    stats.like_calls += 1;
    particle.log_like = ll;
    particle.outside = ll < s.barrier;

    if particle.outside {
        problem.grad_log_like(&particle.position, grad);
        if reflect_in_place(&mut particle.momentum, grad) {
            particle.num_reflections += 1;
            stats.reflections += 1;
        } else {
            stats.zero_gradients += 1;
        }
        particle.steps_outside += 1;
        stats.steps_out += 1;
    } else {
        particle.steps_outside = 0;
        stats.steps_in += 1;
    }
    let inside = !particle.outside;

    if s.delta_p != 0.0 {
        jitter_direction(&mut particle.momentum, s.delta_p, rng);
    }

    if particle.steps_outside > s.prune_patience {
        particle.reset_to_origin(rng);
        stats.prunes += 1;
    }
    Ok(inside)
}
