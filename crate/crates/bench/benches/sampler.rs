use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ggns_core::hss::HssSettings;
use ggns_core::problems::{DiagonalGaussian, GaussianMixture};
use ggns_core::rng::seeded;
use ggns_core::{evolve_batch, find_clusters, run, ClusterMoments, NSConfig, TargetProblem};
use rand::Rng;
use rand_distr::StandardNormal;

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_batch");
    group.sample_size(10);
    for dim in [8, 32] {
        let problem = DiagonalGaussian::new(dim, 1.0, 10.0).unwrap();
        let mut rng = seeded(1);
        let starts: Vec<Vec<f64>> = (0..8).map(|_| (0..dim).map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let lls: Vec<f64> = starts.iter().map(|x| problem.log_like(x)).collect();
        let barrier = lls.iter().copied().fold(f64::INFINITY, f64::min);
        let settings = HssSettings::from_config(&NSConfig::default(), barrier, 0.1);
        group.bench_function(format!("gaussian_d{dim}"), |b| {
            b.iter(|| evolve_batch(black_box(&starts), &lls, &problem, &settings, 7).unwrap())
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let mut rng = seeded(2);
    let points: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let centre = if i % 2 == 0 { -5.0 } else { 5.0 };
            (0..8).map(|_| centre + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    c.bench_function("find_clusters_200x8", |b| b.iter(|| find_clusters(black_box(&points))));
}

fn moments(c: &mut Criterion) {
    c.bench_function("kill_update_1000", |b| {
        b.iter_batched(
            || ClusterMoments::init(200),
            |mut m| {
                for k in 0..1000 {
                    m.kill_update(0, -50.0 + 0.05 * k as f64).unwrap();
                    m.add_points(0, 1);
                }
                m
            },
            BatchSize::SmallInput,
        )
    });
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    let mixture = GaussianMixture::nine_modes().unwrap();
    let cfg = NSConfig { n_live: 50, seed: 3, ..NSConfig::default() };
    group.bench_function("mixture9_nlive50", |b| b.iter(|| run(&mixture, black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, batch, clustering, moments, full_run);
criterion_main!(benches);
