//! Experiment drivers. Each returns plain rows; writing them out is the
//! caller's business, so the same drivers back the binary and the test suites.

use anyhow::{Context, Result};
use ggns_core::evidence::resample_equal;
use ggns_core::problems::{build_problem, GaussianMixture, ProblemParams, TorusReward};
use ggns_core::rng::seeded;
use ggns_core::{mode_coverage, run, NSConfig, NSResult, TargetProblem, TerminationMode};
use rayon::prelude::*;
use serde::Serialize;

/// One run, or the mean/std over runs, in the schema shared by the scaling,
/// torus, bias-table and ablation CSVs. Aggregate rows leave `seed` empty; a
/// standard deviation over a single run is absent rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub row: &'static str,
    pub label: String,
    pub dim: usize,
    pub seed: Option<u64>,
    pub n_like_calls: Option<f64>,
    pub iterations: Option<f64>,
    pub log_z: Option<f64>,
    pub log_z_true: Option<f64>,
    pub delta_log_z: Option<f64>,
    pub abs_delta_log_z: Option<f64>,
    pub sigma_kl: Option<f64>,
    pub sigma_moments: Option<f64>,
    pub d_kl: Option<f64>,
}

impl RunRow {
    pub fn from_result(label: &str, result: &NSResult, log_z_true: Option<f64>) -> Self {
        let delta = log_z_true.map(|t| result.log_z - t);
        Self {
            row: "run",
            label: label.to_string(),
            dim: result.dim,
            seed: Some(result.config.seed),
            n_like_calls: Some(result.n_like_calls as f64),
            iterations: Some(result.iterations as f64),
            log_z: Some(result.log_z),
            log_z_true,
            delta_log_z: delta,
            abs_delta_log_z: delta.map(f64::abs),
            sigma_kl: Some(result.log_z_err_kl),
            sigma_moments: Some(result.log_z_err_moments),
            d_kl: Some(result.d_kl),
        }
    }
}

fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

/// Mean and standard-deviation rows over `runs`, which must share a label and
/// dimension.
pub fn aggregate(runs: &[RunRow]) -> (RunRow, RunRow) {
    let first = &runs[0];
    let column = |f: fn(&RunRow) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        let vals: Option<Vec<f64>> = runs.iter().map(f).collect();
        match vals {
            Some(v) if !v.is_empty() => {
                let (m, s) = mean_std(&v);
                (Some(m), s)
            }
            _ => (None, None),
        }
    };
    let mut mean = RunRow {
        row: "mean",
        seed: None,
        ..first.clone()
    };
    let mut std = RunRow {
        row: "std",
        seed: None,
        ..first.clone()
    };
    macro_rules! fill {
        ($($field:ident),*) => {$(
            let (m, s) = column(|r| r.$field);
            mean.$field = m;
            std.$field = s;
        )*};
    }
    fill!(n_like_calls, iterations, log_z, log_z_true, delta_log_z, abs_delta_log_z, sigma_kl, sigma_moments, d_kl);
    (mean, std)
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Runs `problem` once per seed, in parallel.
pub fn run_seeds(problem: &dyn TargetProblem, cfg: &NSConfig, seeds: &[u64]) -> Result<Vec<NSResult>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = NSConfig { seed, ..cfg.clone() };
            run(problem, &cfg).with_context(|| format!("{} (dim {}) seed {seed}", problem.name(), problem.dim()))
        })
        .collect()
}

/// Per-run rows followed by the mean and std rows.
pub fn evidence_rows(label: &str, problem: &dyn TargetProblem, cfg: &NSConfig, seeds: &[u64]) -> Result<Vec<RunRow>> {
    let truth = problem.analytic_log_z();
    let mut rows: Vec<RunRow> = run_seeds(problem, cfg, seeds)?
        .iter()
        .map(|r| RunRow::from_result(label, r, truth))
        .collect();
    let (mean, std) = aggregate(&rows);
    rows.push(mean);
    rows.push(std);
    Ok(rows)
}

pub fn means(rows: &[RunRow]) -> impl Iterator<Item = &RunRow> {
    rows.iter().filter(|r| r.row == "mean")
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub struct Scaling {
    pub rows: Vec<RunRow>,
    /// Slope of ln(mean likelihood calls) against ln d.
    pub slope: f64,
}

/// Diagonal Gaussian at every `dim`, `cfg.n_live` fixed.
pub fn scaling(label: &str, dims: &[usize], seeds: &[u64], cfg: &NSConfig) -> Result<Scaling> {
    let mut rows = Vec::new();
    for &d in dims {
        let problem = build_problem("gaussian", &ProblemParams::new().with("dim", d))?;
        rows.extend(evidence_rows(label, problem.as_ref(), cfg, seeds)?);
    }
    let points: Vec<(f64, f64)> = means(&rows)
        .map(|r| (r.dim as f64, r.n_like_calls.unwrap_or(f64::NAN)))
        .collect();
    let slope = if points.len() >= 2 { log_log_slope(&points) } else { f64::NAN };
    Ok(Scaling { rows, slope })
}

/// Torus reward with `c = n + 1`, `α = 2`, `β = 3`.
pub fn torus(dims: &[usize], seeds: &[u64], cfg: &NSConfig) -> Result<Vec<RunRow>> {
    let mut rows = Vec::new();
    for &n in dims {
        let problem = TorusReward::standard(n)?;
        rows.extend(evidence_rows("torus", &problem, cfg, seeds)?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRow {
    pub n: usize,
    pub log_z_recursion: f64,
    pub log_z_quadrature: f64,
    pub abs_diff: f64,
}

/// Trapezoid quadrature of the torus reward's normalized evidence for `n ≤ 2`
/// (periodic integrand, so the rule converges fast).
pub fn torus_quadrature(n: usize, points_per_dim: usize) -> Result<QuadratureRow> {
    anyhow::ensure!(n == 1 || n == 2, "quadrature check only for n = 1 or 2");
    let t = TorusReward::standard(n)?;
    let h = 2.0 * std::f64::consts::PI / points_per_dim as f64;
    let mut sum = 0.0;
    if n == 1 {
        for i in 0..points_per_dim {
            sum += t.log_like(&[i as f64 * h]).exp();
        }
    } else {
        for i in 0..points_per_dim {
            for j in 0..points_per_dim {
                sum += t.log_like(&[i as f64 * h, j as f64 * h]).exp();
            }
        }
    }
    let cells = (points_per_dim as f64).powi(n as i32);
    let quad = (sum / cells).ln();
    let rec = t.analytic_log_z().expect("torus has a closed form");
    Ok(QuadratureRow {
        n,
        log_z_recursion: rec,
        log_z_quadrature: quad,
        abs_diff: (rec - quad).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub problem: String,
    pub runs: usize,
    pub mean_bias: f64,
    pub std_bias: Option<f64>,
    pub mean_sigma_kl: f64,
}

pub struct BiasTable {
    pub rows: Vec<BiasRow>,
    pub runs: Vec<RunRow>,
}

/// Evidence bias on the nine-mode mixture and the 10-D funnel.
pub fn bias_table(seeds: &[u64], cfg: &NSConfig) -> Result<BiasTable> {
    let mut table = BiasTable {
        rows: Vec::new(),
        runs: Vec::new(),
    };
    for name in ["mixture9", "funnel"] {
        let problem = build_problem(name, &ProblemParams::new())?;
        let rows = evidence_rows(name, problem.as_ref(), cfg, seeds)?;
        let mean = rows.iter().find(|r| r.row == "mean").expect("aggregate row");
        let std = rows.iter().find(|r| r.row == "std").expect("aggregate row");
        table.rows.push(BiasRow {
            problem: name.to_string(),
            runs: seeds.len(),
            mean_bias: mean.delta_log_z.expect("analytic evidence"),
            std_bias: std.delta_log_z,
            mean_sigma_kl: mean.sigma_kl.unwrap_or(f64::NAN),
        });
        table.runs.extend(rows);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModesRow {
    pub row: &'static str,
    pub n_live: usize,
    pub clustering: bool,
    pub seed: Option<u64>,
    pub modes_found: f64,
}

/// Equal-weight posterior samples drawn per run for mode counting.
pub const MODE_SAMPLES: usize = 2000;

/// Modes of the nine-mode mixture found by one run: a mode counts if any of
/// `MODE_SAMPLES` equal-weight samples lies within one component σ of it.
pub fn modes_found(result: &NSResult, mixture: &GaussianMixture) -> Result<usize> {
    let mut rng = seeded(result.config.seed ^ 0x6d6f_6465);
    let samples = resample_equal(&result.dead, MODE_SAMPLES, &mut rng)?;
    Ok(mode_coverage(&samples, mixture.centers(), mixture.sigma()))
}

/// Mode counts over `n_lives` × clustering on/off. Per-seed rows, then means.
pub fn mode_table(n_lives: &[usize], seeds: &[u64], cfg: &NSConfig) -> Result<Vec<ModesRow>> {
    let mixture = GaussianMixture::nine_modes()?;
    let mut rows = Vec::new();
    let mut mean_rows = Vec::new();
    for &clustering in &[true, false] {
        for &n_live in n_lives {
            let cfg = NSConfig {
                n_live,
                clustering_enabled: clustering,
                ..cfg.clone()
            };
            let results = run_seeds(&mixture, &cfg, seeds)?;
            let mut total = 0.0;
            for r in &results {
                let found = modes_found(r, &mixture)?;
                total += found as f64;
                rows.push(ModesRow {
                    row: "run",
                    n_live,
                    clustering,
                    seed: Some(r.config.seed),
                    modes_found: found as f64,
                });
            }
            mean_rows.push(ModesRow {
                row: "mean",
                n_live,
                clustering,
                seed: None,
                modes_found: total / results.len() as f64,
            });
        }
    }
    rows.extend(mean_rows);
    Ok(rows)
}

/// The ablation configurations, each a modification of `base`.
pub fn ablation_configs(base: &NSConfig) -> Vec<(&'static str, NSConfig)> {
    vec![
        ("baseline", base.clone()),
        (
            "fixed_dt_0.5",
            NSConfig {
                adaptive_dt: false,
                dt_ini: 0.5,
                ..base.clone()
            },
        ),
        (
            "fixed_dt_0.1",
            NSConfig {
                adaptive_dt: false,
                dt_ini: 0.1,
                ..base.clone()
            },
        ),
        (
            "fixed_steps_20",
            NSConfig {
                fixed_steps: Some(20),
                ..base.clone()
            },
        ),
        (
            "fixed_steps_200",
            NSConfig {
                fixed_steps: Some(200),
                ..base.clone()
            },
        ),
        (
            "delta_p_0",
            NSConfig {
                delta_p: 0.0,
                ..base.clone()
            },
        ),
        (
            "legacy_termination",
            NSConfig {
                termination_mode: TerminationMode::LegacyRemainingMass,
                ..base.clone()
            },
        ),
    ]
}

/// Gaussian runs at each `dim` for each named configuration.
pub fn ablation(
    configs: &[(&'static str, NSConfig)],
    dims: &[usize],
    seeds: &[u64],
) -> Result<Vec<(&'static str, Vec<RunRow>)>> {
    configs
        .iter()
        .map(|(name, cfg)| Ok((*name, scaling(name, dims, seeds, cfg)?.rows)))
        .collect()
}
