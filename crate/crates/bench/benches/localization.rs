use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mapbench::gridmap::raycast;
use mapbench::mcl::{init_particles, likelihood_field, motion_update, resample_kld, sensor_update, MclConfig};
use mapbench::simharness::{campus_world, rasterize, simulate_drive, ScenarioConfig};
use mapbench::Pose2D;

fn localization(c: &mut Criterion) {
    let world = campus_world(0);
    let truth = rasterize(&world, 0.05, &world.bounds).unwrap();
    let (log, gt) = simulate_drive(&world, &ScenarioConfig::default()).unwrap();
    let cfg = MclConfig::default();
    let field = likelihood_field(&truth, cfg.sigma_hit, cfg.saturation_distance).unwrap();
    let start = gt.poses[0].pose;
    let scan = log.scans().nth(10).unwrap().clone();
    let particles = init_particles(start, cfg.init_std, cfg.n_max, &cfg).unwrap();

    let mut g = c.benchmark_group("mcl_5000");
    g.bench_function("likelihood_field", |b| {
        b.iter(|| likelihood_field(&truth, cfg.sigma_hit, cfg.saturation_distance).unwrap())
    });
    g.bench_function("motion_update", |b| {
        b.iter_batched_ref(
            || particles.clone(),
            |ps| motion_update(ps, &Pose2D::default(), &Pose2D::new(0.25, 0.0, 0.01), cfg.alphas, 0, 1),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("sensor_update", |b| {
        b.iter_batched_ref(
            || particles.clone(),
            |ps| sensor_update(ps, &scan, &field, &log.mount, log.max_range, &cfg).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("resample_kld", |b| {
        b.iter(|| resample_kld(&particles, &cfg, 1).unwrap())
    });
    g.bench_function("raycast_360", |b| {
        b.iter(|| {
            (0..360)
                .filter_map(|i| raycast(&truth, start.position(), (i as f64).to_radians(), 30.0).unwrap())
                .count()
        })
    });
    g.finish();
}

criterion_group!(benches, localization);
criterion_main!(benches);
