//! Run artifacts: `dead_points.csv`, `summary.json` and `diagnostics.csv`.
//!
//! `dead_points.csv` columns: `weight,log_like,log_X,cluster,theta_1..theta_d`,
//! where `weight` is the normalized posterior weight `Lᵢwᵢ/Z`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::engine::{IterationRecord, NSConfig};
use crate::error::Result;
use crate::evidence::NSResult;

pub const DEAD_POINTS_FILE: &str = "dead_points.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

pub fn write_dead_points(path: &Path, result: &NSResult) -> Result<()> {
    let weights = result.posterior_weights()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["weight".to_string(), "log_like".into(), "log_X".into(), "cluster".into()];
    header.extend((1..=result.dim).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for (d, p) in result.dead.iter().zip(&weights) {
        let mut row = vec![p.to_string(), d.log_like.to_string(), d.log_x.to_string(), d.cluster.to_string()];
        row.extend(d.position.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The JSON summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub problem: &'a str,
    pub dim: usize,
    pub seed: u64,
    pub log_z: f64,
    pub log_z_err_moments: f64,
    pub log_z_err_kl: f64,
    pub d_kl: f64,
    pub analytic_log_z: Option<f64>,
    pub n_like_calls: u64,
    pub iterations: usize,
    pub converged: bool,
    pub n_dead: usize,
    pub max_clusters: usize,
    pub cluster_log_z: &'a [(usize, f64)],
    pub config: &'a NSConfig,
    pub wall_time_s: f64,
}

impl<'a> Summary<'a> {
    pub fn new(result: &'a NSResult, analytic_log_z: Option<f64>) -> Self {
        Self {
            problem: &result.problem,
            dim: result.dim,
            seed: result.config.seed,
            log_z: result.log_z,
            log_z_err_moments: result.log_z_err_moments,
            log_z_err_kl: result.log_z_err_kl,
            d_kl: result.d_kl,
            analytic_log_z,
            n_like_calls: result.n_like_calls,
            iterations: result.iterations,
            converged: result.converged,
            n_dead: result.dead.len(),
            max_clusters: result.max_clusters,
            cluster_log_z: &result.cluster_log_z,
            config: &result.config,
            wall_time_s: result.wall_time_s,
        }
    }
}

pub fn write_summary(path: &Path, result: &NSResult, analytic_log_z: Option<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &Summary::new(result, analytic_log_z))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    // serde emits the header from the first record; write it explicitly for empty traces.
    if trace.is_empty() {
        w.write_record([
            "iteration",
            "n_clusters",
            "dt",
            "out_frac",
            "log_delta_xl",
            "log_x",
            "log_like_max",
            "barrier",
            "log_z",
            "n_like_calls",
        ])?;
    }
    for record in trace {
        w.serialize(record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes all three artifacts into `dir`.
pub fn write_run(dir: &Path, result: &NSResult, analytic_log_z: Option<f64>) -> Result<()> {
    write_dead_points(&dir.join(DEAD_POINTS_FILE), result)?;
    write_summary(&dir.join(SUMMARY_FILE), result, analytic_log_z)?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &result.trace)?;
    Ok(())
}
