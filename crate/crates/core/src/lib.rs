//! Gradient-guided nested sampling.
//!
//! The engine estimates the evidence `Z = ∫ L(θ) π(θ) dθ` of a differentiable
//! density over a uniform box prior, and produces weighted posterior samples.
//! New live points are generated by Hamiltonian slice sampling: particles fly
//! in straight lines and reflect specularly off the iso-likelihood boundary
//! using the score direction.
//!
//! Module map:
//! - [`problems`]: target-density interface and the built-in benchmarks.
//! - [`hss`]: batch Hamiltonian slice sampler.
//! - [`clusters`]: k-NN mode detection and per-cluster evidence/volume moments.
//! - [`engine`]: the outer kill/respawn loop and termination.
//! - [`evidence`]: post-run analysis (log Z, KL, resampling, mode coverage).
//! - [`output`]: CSV/JSON artifacts.

pub mod clusters;
pub mod engine;
pub mod error;
pub mod evidence;
pub mod hss;
pub mod logspace;
pub mod output;
pub mod problems;
pub mod rng;

pub use clusters::{find_clusters, spawn_allocation, ClusterMoments};
pub use engine::{run, run_with_observer, termination_check, IterationRecord, NSConfig, Progress, TerminationMode};
pub use error::{Error, Result};
pub use evidence::{kl_divergence, log_evidence, mode_coverage, resample_equal, DeadPoint, NSResult};
pub use hss::{adapt_dt, evolve_batch, reflect, Particle};
pub use problems::{PriorBox, TargetProblem};
