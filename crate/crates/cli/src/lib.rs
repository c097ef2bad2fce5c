//! Benchmark driver for the gradient-guided nested sampler.
//!
//! Every subcommand writes into one output directory: `--out` if given, else
//! `$GGNS_OUT/<subcommand>`, else `ggns-out/<subcommand>`. A non-empty
//! directory is never written into without `--force`.
//!
//! CSV schemas (headers are always written):
//! - `scaling.csv`, `torus.csv`, `table_runs.csv`, `ablate_<config>.csv`:
//!   `row,label,dim,seed,n_like_calls,iterations,log_z,log_z_true,delta_log_z,
//!   abs_delta_log_z,sigma_kl,sigma_moments,d_kl`. `row` is `run`, `mean` or
//!   `std`; aggregate rows have no seed, and a std over one run is empty.
//! - `table.csv`: `problem,runs,mean_bias,std_bias,mean_sigma_kl`.
//! - `torus_quadrature.csv`: `n,log_z_recursion,log_z_quadrature,abs_diff`.
//! - `modes.csv`: `row,n_live,clustering,seed,modes_found`.
//! - `ablate.csv`: `config,dim,runs,mean_abs_delta,mean_delta,std_delta,
//!   mean_n_like_calls,exceeds_baseline`.
//! - `run` writes `dead_points.csv`, `summary.json` and `diagnostics.csv`.

pub mod config;
pub mod experiments;
pub mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ggns_core::output::write_run;
use ggns_core::problems::{build_problem, PROBLEM_NAMES};
use ggns_core::{run, NSConfig};
use serde::Serialize;

use config::Settings;
use experiments::{RunRow, Scaling};

/// Marks errors caused by bad input (exit status 2) rather than failed runs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "ggns", version, about = "Gradient-guided nested sampling benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base seed; multi-seed commands use seed, seed+1, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (default: $GGNS_OUT/<subcommand>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Root for default output directories.
    #[arg(long, global = true, env = "GGNS_OUT", default_value = "ggns-out", hide_env_values = true)]
    pub out_root: PathBuf,

    /// key=value settings file; command-line flags win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Extra key=value setting (repeatable); wins over the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,

    /// Also write SVG plots next to the CSVs.
    #[arg(long, global = true)]
    pub plot: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One run: dead points, summary and diagnostics.
    Run(RunArgs),
    /// Likelihood calls and evidence error against dimension (diagonal Gaussian).
    Scaling(SweepArgs),
    /// Evidence bias on the nine-mode mixture and the 10-D funnel.
    Table(SeedArgs),
    /// Normalization error of the torus reward against dimension.
    Torus(SweepArgs),
    /// Modes of the nine-mode mixture found, clustering on and off.
    Modes(ModesArgs),
    /// Ablations of the sampler's components on the diagonal Gaussian.
    Ablate(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// One of: gaussian, funnel, mixture9, mixture25, torus, linear-gaussian, flat.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Problem parameter (repeatable), e.g. `--param sigma=2`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub n_live: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub n_live: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub n_live: Option<usize>,
    /// Full-size sweep: dimensions up to 128 and 10 seeds.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Comma-separated live-point counts.
    #[arg(long, value_delimiter = ',')]
    pub n_lives: Option<Vec<usize>>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Scaling(_) => "scaling",
            Command::Table(_) => "table",
            Command::Torus(_) => "torus",
            Command::Modes(_) => "modes",
            Command::Ablate(_) => "ablate",
        }
    }
}

/// Config file, then `--set`, then the dedicated flags.
fn resolve_settings(cli: &Cli) -> Result<Settings> {
    let wrap = |e: anyhow::Error| UsageError(format!("{e:#}"));
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path).map_err(wrap)?,
        None => Settings::new(),
    };
    let mut flags = Settings::new();
    for pair in &cli.set {
        flags.set_pair(pair).map_err(wrap)?;
    }
    let mut put = |key: &str, value: Option<String>| -> Result<()> {
        if let Some(v) = value {
            flags.set(key, v).map_err(wrap)?;
        }
        Ok(())
    };
    put("seed", cli.seed.map(|v| v.to_string()))?;
    if cli.plot {
        put("plot", Some("true".into()))?;
    }
    let join = |v: &Option<Vec<usize>>| v.as_ref().map(|v| v.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
    match &cli.command {
        Command::Run(a) => {
            put("problem", a.problem.clone())?;
            put("dim", a.dim.map(|v| v.to_string()))?;
            put("n_live", a.n_live.map(|v| v.to_string()))?;
            for p in &a.params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| UsageError(format!("expected --param key=value, got `{p}`")))?;
                put(&format!("param.{}", k.trim()), Some(v.trim().to_string()))?;
            }
        }
        Command::Table(a) => {
            put("seeds", a.seeds.map(|v| v.to_string()))?;
            put("n_live", a.n_live.map(|v| v.to_string()))?;
        }
        Command::Scaling(a) | Command::Torus(a) | Command::Ablate(a) => {
            put("dims", join(&a.dims))?;
            put("seeds", a.seeds.map(|v| v.to_string()))?;
            put("n_live", a.n_live.map(|v| v.to_string()))?;
        }
        Command::Modes(a) => {
            put("seeds", a.seeds.map(|v| v.to_string()))?;
            put("n_lives", join(&a.n_lives))?;
        }
    }
    s.merge(&flags);
    Ok(s)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| cli.out_root.join(cli.command.name()))
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force`.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return usage(format!("output path {} exists and is not a directory", dir.display()));
        }
        let non_empty = fs::read_dir(dir)?.next().is_some();
        if non_empty && !force {
            return usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            ));
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const RUN_ROW_HEADER: &[&str] = &[
    "row",
    "label",
    "dim",
    "seed",
    "n_like_calls",
    "iterations",
    "log_z",
    "log_z_true",
    "delta_log_z",
    "abs_delta_log_z",
    "sigma_kl",
    "sigma_moments",
    "d_kl",
];

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn config_line(cfg: &NSConfig) -> String {
    format!(
        "n_live={} tol={} min_ref={} max_ref={} delta_p={} dt_ini={} kill_fraction={} clustering={} adaptive_dt={} termination={} fixed_steps={}",
        cfg.n_live,
        cfg.tol,
        cfg.min_ref,
        cfg.max_ref,
        cfg.delta_p,
        cfg.dt_ini,
        cfg.kill_fraction,
        cfg.clustering_enabled,
        cfg.adaptive_dt,
        cfg.termination_mode,
        cfg.fixed_steps.map_or("none".to_string(), |s| s.to_string())
    )
}

fn seeds_from(settings: &Settings, default_count: usize) -> Result<Vec<u64>> {
    let count = settings.parsed::<usize>("seeds")?.unwrap_or(default_count);
    if count == 0 {
        return usage("seeds must be at least 1");
    }
    Ok(experiments::seed_list(settings.parsed("seed")?.unwrap_or(0), count))
}

/// Mean rows of `rows` as `(dim, value, error)` plot points.
fn mean_points(rows: &[RunRow], value: fn(&RunRow) -> Option<f64>, err: fn(&RunRow) -> Option<f64>) -> Vec<(f64, f64, Option<f64>)> {
    rows.iter()
        .filter(|r| r.row == "mean")
        .map(|r| (r.dim as f64, value(r).unwrap_or(f64::NAN), err(r)))
        .collect()
}

fn scaling_plot(path: &Path, title: &str, groups: &[(&str, &[RunRow])]) -> Result<()> {
    let calls = svg::Plot {
        title: format!("{title}: likelihood calls"),
        x_label: "dimension".into(),
        y_label: "likelihood calls".into(),
        log_x: true,
        log_y: true,
        series: groups
            .iter()
            .map(|(name, rows)| svg::Series {
                name: name.to_string(),
                points: mean_points(rows, |r| r.n_like_calls, |_| None),
            })
            .collect(),
    };
    let delta = svg::Plot {
        title: format!("{title}: log Z error"),
        x_label: "dimension".into(),
        y_label: "mean Δlog Z (bars: mean σ_kl)".into(),
        log_x: true,
        log_y: false,
        series: groups
            .iter()
            .map(|(name, rows)| svg::Series {
                name: name.to_string(),
                points: mean_points(rows, |r| r.delta_log_z, |r| r.sigma_kl),
            })
            .collect(),
    };
    let stem = path.with_extension("");
    write_text(&stem.with_file_name(format!("{}_calls.svg", stem.file_name().unwrap().to_string_lossy())), &calls.render())?;
    write_text(&stem.with_file_name(format!("{}_error.svg", stem.file_name().unwrap().to_string_lossy())), &delta.render())?;
    Ok(())
}

const SCALING_FOOTER: &str = "\
Reference scalings (published, not executed here):
  PolyChord            n_like ∝ n_live · 5d²
  dynesty (slice mode) n_like ∝ n_live · d²
  GGNS                 n_like ∝ n_live · d
";

const TABLE_FOOTER: &str = "\
Reference values (published, mean ± sd over 10 runs, not executed here):
  method                    mixture            funnel
  HMC                       -1.876 ± 0.527     -0.835 ± 0.257
  SMC                       -0.362 ± 0.293     -0.216 ± 0.157
  On-policy PIS-NN          -1.192 ± 0.482     -0.018 ± 0.020
  Off-policy GFlowNet TB    -0.003 ± 0.011     -0.026 ± 0.020
  On-policy GFlowNet TB     -1.301 ± 0.434     -0.012 ± 0.108
  GGNS                       0.029 ± 0.132     -0.051 ± 0.353
";

const MODES_FOOTER: &str = "\
Reference values (published, mean modes over 10 runs):
  n_live                    20    50    100   200
  without clustering        3.6   6.4   8.2   8.9
  with clustering           4.1   6.4   8.4   9
";

/// Parses arguments already collected by clap and runs the command.
pub fn execute(cli: &Cli) -> Result<()> {
    let settings = resolve_settings(cli)?;
    let cfg = settings.ns_config().map_err(|e| UsageError(format!("{e:#}")))?;
    let plot = settings.flag("plot").map_err(|e| UsageError(format!("{e:#}")))?;
    let dir = out_dir(cli);
    match &cli.command {
        Command::Run(_) => cmd_run(&settings, &cfg, &dir, cli.force),
        Command::Scaling(a) => cmd_scaling(&settings, &cfg, &dir, cli.force, a.full, plot),
        Command::Table(_) => cmd_table(&settings, &cfg, &dir, cli.force),
        Command::Torus(_) => cmd_torus(&settings, &cfg, &dir, cli.force, plot),
        Command::Modes(_) => cmd_modes(&settings, &cfg, &dir, cli.force),
        Command::Ablate(a) => cmd_ablate(&settings, &cfg, &dir, cli.force, a.full, plot),
    }
}

fn cmd_run(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool) -> Result<()> {
    let Some(name) = settings.get("problem") else {
        return usage(format!("run needs --problem (one of {})", PROBLEM_NAMES.join(", ")));
    };
    let problem = build_problem(name, &settings.problem_params()).map_err(|e| UsageError(e.to_string()))?;
    prepare_out_dir(dir, force)?;
    let result = run(problem.as_ref(), cfg)?;
    let truth = problem.analytic_log_z();
    write_run(dir, &result, truth)?;
    println!(
        "{} d={} seed={}: log Z = {:.4} ± {:.4} (kl) ± {:.4} (moments){}; {} likelihood calls, {} iterations",
        result.problem,
        result.dim,
        cfg.seed,
        result.log_z,
        result.log_z_err_kl,
        result.log_z_err_moments,
        truth.map_or(String::new(), |t| format!(", analytic {t:.4}")),
        result.n_like_calls,
        result.iterations
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_scaling(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool, full: bool, plot: bool) -> Result<()> {
    let default_dims: &[usize] = if full { &[4, 8, 16, 32, 64, 128] } else { &[4, 8, 16, 32, 64] };
    let dims = settings.list::<usize>("dims")?.unwrap_or_else(|| default_dims.to_vec());
    let seeds = seeds_from(settings, if full { 10 } else { 5 })?;
    prepare_out_dir(dir, force)?;
    let Scaling { rows, slope } = experiments::scaling("gaussian", &dims, &seeds, cfg)?;
    write_csv(&dir.join("scaling.csv"), &rows, RUN_ROW_HEADER)?;

    let mut report = format!("Scaling on the diagonal Gaussian ({} seeds)\n{}\n\n", seeds.len(), config_line(cfg));
    report.push_str("    d   mean calls   mean Δlog Z   std Δlog Z   mean σ_kl   |Δ| ≤ 3σ_kl\n");
    let std_rows: Vec<&RunRow> = rows.iter().filter(|r| r.row == "std").collect();
    for (m, s) in experiments::means(&rows).zip(std_rows) {
        let ok = m.delta_log_z.unwrap_or(f64::NAN).abs() <= 3.0 * m.sigma_kl.unwrap_or(0.0);
        report.push_str(&format!(
            "{:>5}   {:>10.0}   {:>11}   {:>10}   {:>9}   {}\n",
            m.dim,
            m.n_like_calls.unwrap_or(f64::NAN),
            fmt_opt(m.delta_log_z),
            fmt_opt(s.delta_log_z),
            fmt_opt(m.sigma_kl),
            if ok { "yes" } else { "no" }
        ));
    }
    report.push_str(&format!("\nslope of ln(calls) vs ln(d): {slope:.3}\n\n{SCALING_FOOTER}"));
    write_text(&dir.join("report.txt"), &report)?;
    if plot {
        scaling_plot(&dir.join("scaling.svg"), "Diagonal Gaussian", &[("ggns", &rows)])?;
    }
    print!("{report}");
    Ok(())
}

fn cmd_table(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool) -> Result<()> {
    let seeds = seeds_from(settings, 10)?;
    prepare_out_dir(dir, force)?;
    let table = experiments::bias_table(&seeds, cfg)?;
    write_csv(&dir.join("table.csv"), &table.rows, &["problem", "runs", "mean_bias", "std_bias", "mean_sigma_kl"])?;
    write_csv(&dir.join("table_runs.csv"), &table.runs, RUN_ROW_HEADER)?;
    let mut report = format!("Evidence bias over {} runs\n\n    problem     mean bias    std bias   mean σ_kl\n", seeds.len());
    for r in &table.rows {
        report.push_str(&format!(
            "    {:<10} {:>10.4} {:>11} {:>11.4}\n",
            r.problem,
            r.mean_bias,
            fmt_opt(r.std_bias),
            r.mean_sigma_kl
        ));
    }
    report.push_str(&format!(
        "\nRun configuration (assumed; the published table does not state one):\n  {}\n\n{TABLE_FOOTER}",
        config_line(cfg)
    ));
    write_text(&dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn cmd_torus(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool, plot: bool) -> Result<()> {
    let dims = settings.list::<usize>("dims")?.unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let seeds = seeds_from(settings, 5)?;
    prepare_out_dir(dir, force)?;
    let rows = experiments::torus(&dims, &seeds, cfg)?;
    write_csv(&dir.join("torus.csv"), &rows, RUN_ROW_HEADER)?;
    let quad: Vec<_> = dims
        .iter()
        .filter(|&&n| n <= 2)
        .map(|&n| experiments::torus_quadrature(n, 512))
        .collect::<Result<_>>()?;
    write_csv(&dir.join("torus_quadrature.csv"), &quad, &["n", "log_z_recursion", "log_z_quadrature", "abs_diff"])?;

    let mut report = format!("Torus reward normalization, c = n + 1, α = 2, β = 3 ({} seeds)\n{}\n\n", seeds.len(), config_line(cfg));
    report.push_str("    n   mean Δlog Z   mean σ_kl   mean D_KL   |Δ| ≤ 3σ_kl\n");
    for m in experiments::means(&rows) {
        let ok = m.delta_log_z.unwrap_or(f64::NAN).abs() <= 3.0 * m.sigma_kl.unwrap_or(0.0);
        report.push_str(&format!(
            "{:>5}   {:>11}   {:>9}   {:>9}   {}\n",
            m.dim,
            fmt_opt(m.delta_log_z),
            fmt_opt(m.sigma_kl),
            fmt_opt(m.d_kl),
            if ok { "yes" } else { "no" }
        ));
    }
    for q in &quad {
        report.push_str(&format!(
            "\nquadrature check n={}: recursion {:.9}, trapezoid {:.9}",
            q.n, q.log_z_recursion, q.log_z_quadrature
        ));
    }
    report.push('\n');
    write_text(&dir.join("report.txt"), &report)?;
    if plot {
        let p = svg::Plot {
            title: "Torus normalization error".into(),
            x_label: "n".into(),
            y_label: "mean Δlog Z (bars: 3 mean σ_kl)".into(),
            log_x: true,
            log_y: false,
            series: vec![svg::Series {
                name: "ggns".into(),
                points: mean_points(&rows, |r| r.delta_log_z, |r| r.sigma_kl.map(|s| 3.0 * s)),
            }],
        };
        write_text(&dir.join("torus.svg"), &p.render())?;
    }
    print!("{report}");
    Ok(())
}

fn cmd_modes(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool) -> Result<()> {
    let seeds = seeds_from(settings, 10)?;
    let n_lives = settings.list::<usize>("n_lives")?.unwrap_or_else(|| vec![20, 50, 100, 200]);
    prepare_out_dir(dir, force)?;
    let rows = experiments::mode_table(&n_lives, &seeds, cfg)?;
    write_csv(&dir.join("modes.csv"), &rows, &["row", "n_live", "clustering", "seed", "modes_found"])?;
    let mut report = format!(
        "Modes of the nine-mode mixture found ({} seeds, {} equal-weight samples per run, radius σ)\n\n  n_live",
        seeds.len(),
        experiments::MODE_SAMPLES
    );
    for n in &n_lives {
        report.push_str(&format!("{n:>7}"));
    }
    for clustering in [false, true] {
        report.push_str(if clustering { "\n  with clustering    " } else { "\n  without clustering " });
        report.truncate(report.trim_end().len());
        report.push_str("  ");
        for n in &n_lives {
            let m = rows
                .iter()
                .find(|r| r.row == "mean" && r.n_live == *n && r.clustering == clustering)
                .map_or(f64::NAN, |r| r.modes_found);
            report.push_str(&format!("{m:>7.1}"));
        }
    }
    report.push_str(&format!("\n\n{MODES_FOOTER}"));
    write_text(&dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct AblationSummary {
    config: String,
    dim: usize,
    runs: usize,
    mean_abs_delta: f64,
    mean_delta: f64,
    std_delta: Option<f64>,
    mean_n_like_calls: f64,
    exceeds_baseline: Option<bool>,
}

fn cmd_ablate(settings: &Settings, cfg: &NSConfig, dir: &Path, force: bool, full: bool, plot: bool) -> Result<()> {
    let default_dims: &[usize] = if full { &[32, 64] } else { &[32] };
    let dims = settings.list::<usize>("dims")?.unwrap_or_else(|| default_dims.to_vec());
    let seeds = seeds_from(settings, if full { 10 } else { 5 })?;
    prepare_out_dir(dir, force)?;
    let configs = experiments::ablation_configs(cfg);
    let results = experiments::ablation(&configs, &dims, &seeds)?;
    let baseline = &results[0].1;
    let mut summary = Vec::new();
    for (name, rows) in &results {
        write_csv(&dir.join(format!("ablate_{name}.csv")), rows, RUN_ROW_HEADER)?;
        let stds: Vec<&RunRow> = rows.iter().filter(|r| r.row == "std").collect();
        for (m, s) in experiments::means(rows).zip(stds) {
            let base = experiments::means(baseline).find(|b| b.dim == m.dim);
            let mean_abs = m.abs_delta_log_z.unwrap_or(f64::NAN);
            summary.push(AblationSummary {
                config: name.to_string(),
                dim: m.dim,
                runs: seeds.len(),
                mean_abs_delta: mean_abs,
                mean_delta: m.delta_log_z.unwrap_or(f64::NAN),
                std_delta: s.delta_log_z,
                mean_n_like_calls: m.n_like_calls.unwrap_or(f64::NAN),
                exceeds_baseline: (*name != "baseline")
                    .then(|| base.map(|b| mean_abs > b.abs_delta_log_z.unwrap_or(f64::NAN)))
                    .flatten(),
            });
        }
    }
    write_csv(
        &dir.join("ablate.csv"),
        &summary,
        &["config", "dim", "runs", "mean_abs_delta", "mean_delta", "std_delta", "mean_n_like_calls", "exceeds_baseline"],
    )?;
    let mut report = format!("Ablations on the diagonal Gaussian ({} seeds)\nbaseline: {}\n\n", seeds.len(), config_line(cfg));
    report.push_str("  config                 d   mean |Δ|   mean Δ     mean calls   > baseline\n");
    for s in &summary {
        report.push_str(&format!(
            "  {:<20} {:>3}   {:>8.4}   {:>8.4}   {:>10.0}   {}\n",
            s.config,
            s.dim,
            s.mean_abs_delta,
            s.mean_delta,
            s.mean_n_like_calls,
            s.exceeds_baseline.map_or("-", |b| if b { "yes" } else { "no" })
        ));
    }
    write_text(&dir.join("report.txt"), &report)?;
    if plot {
        let groups: Vec<(&str, &[RunRow])> = results.iter().map(|(n, r)| (*n, r.as_slice())).collect();
        scaling_plot(&dir.join("ablate.svg"), "Ablations", &groups)?;
    }
    print!("{report}");
    Ok(())
}

/// Exit status for an error returned by [`execute`]: 2 for usage errors, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        1
    }
}
