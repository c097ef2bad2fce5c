//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. A FAIL is reported but only makes the
//! process exit non-zero when `GGNS_ACCEPT_STRICT=1` is set.
//!
//! Runs with `cargo test -p ggns-cli --test acceptance` (a few minutes on
//! one core). Set `GGNS_ACCEPT=1,6` to run a subset.

use std::f64::consts::PI;
use std::time::Instant;

use ggns_cli::experiments::{self, ablation_configs, evidence_rows, means, seed_list, RunRow};
use ggns_core::clusters::ClusterMoments;
use ggns_core::evidence::{resample_equal, weighted_mean};
use ggns_core::hss::{evolve_batch, HssSettings};
use ggns_core::logspace::log_sum_exp;
use ggns_core::problems::{build_problem, eval_grad, DiagonalGaussian, GaussianMixture, LinearGaussian, ProblemParams, TorusReward, PROBLEM_NAMES};
use ggns_core::rng::seeded;
use ggns_core::{adapt_dt, reflect, run, NSConfig, TargetProblem};
use rand::Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn base() -> NSConfig {
    NSConfig {
        n_live: 200,
        ..NSConfig::default()
    }
}

fn mean_row(rows: &[RunRow], dim: usize) -> &RunRow {
    means(rows).find(|r| r.dim == dim).expect("mean row per dimension")
}

/// Mean Δlog Z within three mean σ_kl.
fn unbiased(r: &RunRow) -> bool {
    r.delta_log_z.unwrap().abs() <= 3.0 * r.sigma_kl.unwrap()
}

fn criterion_1() -> anyhow::Result<Outcome> {
    let rows = experiments::torus(&[2, 4, 8, 16], &seed_list(0, 5), &base())?;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 4, 8, 16] {
        let m = mean_row(&rows, n);
        pass &= unbiased(m);
        parts.push(format!("n={n}: Δ={:+.3} tol={:.3}", m.delta_log_z.unwrap(), 3.0 * m.sigma_kl.unwrap()));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn criterion_2(gaussian32: &mut Option<Vec<RunRow>>) -> anyhow::Result<Outcome> {
    let dims = [4, 8, 16, 32, 64];
    let s = experiments::scaling("baseline", &dims, &seed_list(0, 5), &base())?;
    let slope_ok = (0.7..=1.6).contains(&s.slope);
    let mut bias_ok = true;
    let mut parts = vec![format!("slope={:.3} (in [0.7, 1.6]: {})", s.slope, slope_ok)];
    for d in dims {
        let m = mean_row(&s.rows, d);
        bias_ok &= unbiased(m);
        parts.push(format!("d={d}: Δ={:+.3} tol={:.3}", m.delta_log_z.unwrap(), 3.0 * m.sigma_kl.unwrap()));
    }
    *gaussian32 = Some(s.rows.iter().filter(|r| r.dim == 32).cloned().collect());
    Ok(outcome(slope_ok && bias_ok, parts.join("; ")))
}

fn criterion_3() -> anyhow::Result<Outcome> {
    let table = experiments::bias_table(&seed_list(0, 10), &base())?;
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &table.rows {
        let limit = if r.problem == "funnel" { 0.6 } else { 0.3 };
        pass &= r.mean_bias.abs() <= limit;
        parts.push(format!(
            "{}: mean bias {:+.3} ± {:.3} (limit {limit})",
            r.problem,
            r.mean_bias,
            r.std_bias.unwrap_or(f64::NAN)
        ));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn criterion_4() -> anyhow::Result<Outcome> {
    let mixture = GaussianMixture::nine_modes()?;
    let seeds = seed_list(0, 10);
    let mut pass = true;
    let mut parts = Vec::new();
    for (n_live, limit) in [(200, 8.5), (100, 7.5)] {
        let cfg = NSConfig { n_live, ..base() };
        let results = experiments::run_seeds(&mixture, &cfg, &seeds)?;
        let found: Vec<usize> = results
            .iter()
            .map(|r| experiments::modes_found(r, &mixture))
            .collect::<anyhow::Result<_>>()?;
        let mean = found.iter().sum::<usize>() as f64 / found.len() as f64;
        pass &= mean >= limit;
        parts.push(format!("n_live={n_live}: {mean:.1} modes (need ≥ {limit})"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn criterion_5() -> anyhow::Result<Outcome> {
    let lg = LinearGaussian::standard()?;
    let truth = lg.analytic_log_z().unwrap();
    let samples = 10_000;
    let results = experiments::run_seeds(&lg, &base(), &seed_list(0, 5))?;
    let mut worst_z: f64 = 0.0;
    let mut deltas = Vec::new();
    let mut sigmas = Vec::new();
    for r in &results {
        let (_, ess) = weighted_mean(&r.dead)?;
        let draws = resample_equal(&r.dead, samples, &mut seeded(r.config.seed ^ 0x5eed))?;
        for (i, (&mu, &sd)) in lg.posterior_mean().iter().zip(lg.posterior_sd()).enumerate() {
            let m = draws.iter().map(|x| x[i]).sum::<f64>() / samples as f64;
            let se = sd * (1.0 / ess + 1.0 / samples as f64).sqrt();
            worst_z = worst_z.max((m - mu).abs() / se);
        }
        deltas.push(r.log_z - truth);
        sigmas.push(r.log_z_err_kl);
    }
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let mean_sigma = sigmas.iter().sum::<f64>() / sigmas.len() as f64;
    let mean_ok = worst_z <= 5.0;
    let z_ok = mean_delta.abs() <= 3.0 * mean_sigma;
    Ok(outcome(
        mean_ok && z_ok,
        format!(
            "worst posterior-mean offset {worst_z:.2} standard errors (limit 5); Δ={mean_delta:+.3} tol={:.3}; per-seed Δ {:?}",
            3.0 * mean_sigma,
            deltas.iter().map(|d| format!("{d:+.2}")).collect::<Vec<_>>()
        ),
    ))
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

fn criterion_6() -> anyhow::Result<Outcome> {
    let mut rng = seeded(6);
    let mut failures = Vec::new();

    // Reflection: isometry and involution.
    let mut worst_refl: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..40);
        let p: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let q = reflect(&p, &g).expect("non-zero gradient");
        let back = reflect(&q, &g).unwrap();
        let np: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nq: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_refl = worst_refl.max((np - nq).abs() / np);
        for (a, b) in p.iter().zip(&back) {
            worst_refl = worst_refl.max((a - b).abs() / np);
        }
    }
    if worst_refl > 1e-12 {
        failures.push(format!("reflection error {worst_refl:e}"));
    }

    // Slice containment and disc uniformity from the same batches.
    let g2 = DiagonalGaussian::new(2, 1.0, 10.0)?;
    let barrier = -0.5 - (2.0 * PI).ln();
    let mut settings = HssSettings::from_config(&NSConfig::default(), barrier, 0.1);
    let disc = |rng: &mut ggns_core::rng::RunRng, count: usize| {
        let mut out = Vec::new();
        while out.len() < count {
            let p = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if p[0] * p[0] + p[1] * p[1] <= 1.0 {
                out.push(p);
            }
        }
        out
    };
    let mut starts = disc(&mut rng, 500);
    let mut samples = Vec::new();
    for round in 0..4u64 {
        let lls: Vec<f64> = starts.iter().map(|x| g2.log_like(x)).collect();
        let out = evolve_batch(&starts, &lls, &g2, &settings, 500 + round)?;
        if out.log_likes.iter().any(|&ll| ll < barrier) {
            failures.push("a new point left the slice".into());
        }
        settings.dt = adapt_dt(settings.dt, out.out_frac);
        samples.extend(out.points.iter().cloned());
        starts = out.points;
    }
    let reference = disc(&mut rng, samples.len());
    let n = samples.len() as f64;
    let crit = (-(0.01f64 / 2.0).ln() / 2.0).sqrt() * (2.0 / n).sqrt();
    let r2 = |v: &[Vec<f64>]| v.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect::<Vec<_>>();
    let ang = |v: &[Vec<f64>]| v.iter().map(|p| p[1].atan2(p[0])).collect::<Vec<_>>();
    let (d_r, d_a) = (ks_statistic(r2(&samples), r2(&reference)), ks_statistic(ang(&samples), ang(&reference)));
    if d_r >= crit || d_a >= crit {
        failures.push(format!("disc KS radius {d_r:.4} angle {d_a:.4} vs critical {crit:.4}"));
    }

    // Moment recursion against the linear-space accumulator.
    let n_live = 100usize;
    let mut m = ClusterMoments::init(n_live);
    let (mut z, mut x) = (0.0f64, 1.0f64);
    let mut log_l = -20.0;
    for _ in 0..1000 {
        log_l += rng.random_range(0.0..0.05);
        m.kill_update(0, log_l)?;
        m.add_points(0, 1);
        z += x * log_l.exp() / (n_live as f64 + 1.0);
        x *= n_live as f64 / (n_live as f64 + 1.0);
    }
    let rel_z = (m.log_z().exp() - z).abs() / z;
    let rel_x = (m.clusters()[0].log_x.exp() - x).abs() / x;
    if rel_z > 1e-12 || rel_x > 1e-12 {
        failures.push(format!("moment recursion rel. error Z {rel_z:e} X {rel_x:e}"));
    }

    // Split conservation and variance non-negativity under random interleavings.
    for trial in 0..300 {
        let mut m = ClusterMoments::init(rng.random_range(4..80));
        for _ in 0..rng.random_range(1..200) {
            let p = rng.random_range(0..m.n_clusters());
            if rng.random_bool(0.8) {
                m.kill_update(p, rng.random_range(-5.0..5.0))?;
                if rng.random_bool(0.7) {
                    m.add_points(p, 1);
                }
                m.remove_empty();
                if m.n_clusters() == 0 {
                    break;
                }
            } else if m.clusters()[p].n >= 2 {
                let np = m.clusters()[p].n;
                let first = rng.random_range(1..np);
                let parent_x = m.clusters()[p].log_x;
                let kids = m.split(p, &[first, np - first])?;
                let xs: Vec<f64> = kids.iter().map(|&k| m.clusters()[k].log_x).collect();
                if (log_sum_exp(&xs) - parent_x).abs() > 1e-12 {
                    failures.push(format!("split lost volume in trial {trial}"));
                }
            }
            let bad_z = m.log_z().is_finite() && m.log_z2() < 2.0 * m.log_z() - 1e-9;
            let bad_x = m.clusters().iter().any(|c| c.log_x2 < 2.0 * c.log_x - 1e-9);
            if bad_z || bad_x {
                failures.push(format!("negative variance in trial {trial}"));
                break;
            }
        }
    }

    // Gradients against central differences.
    let mut worst_grad: f64 = 0.0;
    for name in PROBLEM_NAMES {
        let p = build_problem(name, &ProblemParams::new())?;
        let b = p.prior_box();
        for _ in 0..100 {
            let theta: Vec<f64> = b
                .lower()
                .iter()
                .zip(b.upper())
                .map(|(lo, hi)| 0.5 * (lo + hi) + 0.5 * (hi - lo) * rng.random_range(-0.4..0.4))
                .collect();
            let g = eval_grad(p.as_ref(), &theta)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..theta.len() {
                let h = 1e-5 * (1.0 + theta[i].abs());
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[i] += h;
                down[i] -= h;
                let fd = (p.log_like(&up) - p.log_like(&down)) / (2.0 * h);
                num += (g[i] - fd).powi(2);
                den += fd * fd;
            }
            worst_grad = worst_grad.max(num.sqrt() / den.sqrt().max(1e-3));
        }
    }
    if worst_grad > 1e-4 {
        failures.push(format!("gradient rel. error {worst_grad:e}"));
    }

    // Full runs under different worker counts.
    let mix = GaussianMixture::nine_modes()?;
    let torus = TorusReward::standard(3)?;
    let problems: [&dyn TargetProblem; 2] = [&mix, &torus];
    for problem in problems {
        let cfg = NSConfig { n_live: 100, seed: 12, ..NSConfig::default() };
        let runs: Vec<_> = [1, 4]
            .iter()
            .map(|&t| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| run(problem, &cfg))
            })
            .collect::<Result<_, _>>()?;
        let same = runs[0].log_z.to_bits() == runs[1].log_z.to_bits()
            && runs[0].dead.len() == runs[1].dead.len()
            && runs[0].dead.iter().zip(&runs[1].dead).all(|(a, b)| a.position == b.position);
        if !same {
            failures.push(format!("{} run differs across worker counts", problem.name()));
        }
    }

    let detail = if failures.is_empty() {
        format!("reflection err {worst_refl:.1e}, gradient err {worst_grad:.1e}, disc KS {d_r:.3}/{d_a:.3} < {crit:.3}, recursion err {:.1e}", rel_z.max(rel_x))
    } else {
        failures.join("; ")
    };
    Ok(outcome(failures.is_empty(), detail))
}

fn criterion_7(gaussian32: Option<Vec<RunRow>>) -> anyhow::Result<Outcome> {
    let seeds = seed_list(0, 5);
    let configs = ablation_configs(&base());
    let baseline = match gaussian32 {
        Some(rows) => rows,
        None => {
            let p = DiagonalGaussian::new(32, 1.0, 10.0)?;
            evidence_rows("baseline", &p, &configs[0].1, &seeds)?
        }
    };
    let base_abs = mean_row(&baseline, 32).abs_delta_log_z.unwrap();
    let mut pass = true;
    let mut parts = vec![format!("baseline mean |Δ|={base_abs:.3}")];
    for name in ["fixed_dt_0.5", "fixed_steps_20", "delta_p_0", "legacy_termination"] {
        let cfg = &configs.iter().find(|c| c.0 == name).unwrap().1;
        let p = DiagonalGaussian::new(32, 1.0, 10.0)?;
        let rows = evidence_rows(name, &p, cfg, &seeds)?;
        let m = mean_row(&rows, 32);
        let abs = m.abs_delta_log_z.unwrap();
        pass &= abs > base_abs;
        parts.push(format!("{name}: {abs:.3} (Δ {:+.3})", m.delta_log_z.unwrap()));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; they are ignored.
    let only: Option<Vec<usize>> = std::env::var("GGNS_ACCEPT")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));
    let names = [
        "torus normalization",
        "scaling and unbiasedness on the Gaussian",
        "mixture and funnel bias",
        "mode coverage",
        "linear-Gaussian posterior and evidence",
        "property suite",
        "ablations",
    ];
    let mut gaussian32 = None;
    let mut all_pass = true;
    for k in 1..=7 {
        if !wanted(k) {
            continue;
        }
        let started = Instant::now();
        let result = match k {
            1 => criterion_1(),
            2 => criterion_2(&mut gaussian32),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            _ => criterion_7(gaussian32.take()),
        };
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        all_pass &= pass;
        println!(
            "criterion {k} ({}): {} [{:.0}s] {detail}",
            names[k - 1],
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    if !all_pass && std::env::var("GGNS_ACCEPT_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
