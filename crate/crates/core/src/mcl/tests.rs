use super::*;
use crate::geometry::{Point2, Pose2D};
use crate::gridmap::{raycast, CellIndex, CellState, OccupancyGrid};
use proptest::prelude::*;
use std::f64::consts::PI;

fn room() -> OccupancyGrid {
    // 10 m x 8 m, walls on the border plus two boxes
    let mut g = OccupancyGrid::filled(200, 160, 0.05, Pose2D::default(), CellState::Free).unwrap();
    for x in 0..200 {
        g.set(CellIndex::new(x, 0), CellState::Occupied);
        g.set(CellIndex::new(x, 159), CellState::Occupied);
    }
    for y in 0..160 {
        g.set(CellIndex::new(0, y), CellState::Occupied);
        g.set(CellIndex::new(199, y), CellState::Occupied);
    }
    for (x0, y0, x1, y1) in [(40, 40, 60, 70), (120, 100, 150, 115)] {
        for y in y0..y1 {
            for x in x0..x1 {
                g.set(CellIndex::new(x, y), CellState::Occupied);
            }
        }
    }
    g
}

fn scan_at(grid: &OccupancyGrid, pose: &Pose2D, t: f64, n: usize, max_range: f64) -> ScanFrame {
    let bearings: Vec<f64> = (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect();
    let ranges = bearings
        .iter()
        .map(|b| {
            raycast(grid, pose.position(), pose.theta + b, max_range)
                .unwrap()
                .unwrap_or(max_range)
        })
        .collect();
    ScanFrame {
        timestamp: t,
        bearings,
        ranges,
    }
}

fn big_config() -> MclConfig {
    MclConfig {
        n_min: 1,
        n_max: 100_000,
        ..MclConfig::default()
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn likelihood_field_values() {
    let mut g = OccupancyGrid::filled(40, 40, 0.1, Pose2D::default(), CellState::Free).unwrap();
    g.set(CellIndex::new(10, 10), CellState::Occupied);
    let f = likelihood_field(&g, 0.3, 1.0).unwrap();
    assert_eq!(f.at(g.cell_to_world(CellIndex::new(10, 10))), 1.0);
    let at_sigma = f.at(g.cell_to_world(CellIndex::new(13, 10)));
    assert!((at_sigma - (-0.5f64).exp()).abs() < 1e-12);
    let floor = (-1.0f64 / (2.0 * 0.09)).exp();
    assert!((f.floor() - floor).abs() < 1e-15);
    assert_eq!(f.at(g.cell_to_world(CellIndex::new(35, 35))), f.floor());
    assert_eq!(f.at(Point2::new(-5.0, -5.0)), f.floor());
    let empty = OccupancyGrid::filled(5, 5, 0.1, Pose2D::default(), CellState::Free).unwrap();
    assert!(likelihood_field(&empty, 0.2, 2.0).is_err());
}

#[test]
fn init_particles_examples() {
    let cfg = MclConfig::default();
    let pose = Pose2D::new(1.0, 2.0, 0.3);
    let ps = init_particles(pose, [0.0; 3], 500, &cfg).unwrap();
    assert!(ps.particles.iter().all(|p| p.pose == pose && p.weight == 1.0 / 500.0));
    assert!(init_particles(pose, [0.1; 3], 10, &cfg).is_err());
    assert!(init_particles(pose, [0.1; 3], 6000, &cfg).is_err());
}

#[test]
fn init_particles_sample_std() {
    let std = [0.3, 0.15, 0.1];
    let ps = init_particles(Pose2D::new(5.0, -2.0, 0.0), std, 100_000, &big_config()).unwrap();
    let xs: Vec<f64> = ps.particles.iter().map(|p| p.pose.x).collect();
    let ys: Vec<f64> = ps.particles.iter().map(|p| p.pose.y).collect();
    let ts: Vec<f64> = ps.particles.iter().map(|p| p.pose.theta).collect();
    for (v, s) in [(&xs, std[0]), (&ys, std[1]), (&ts, std[2])] {
        assert!((std_dev(v) / s - 1.0).abs() < 0.05, "{} vs {s}", std_dev(v));
    }
}

#[test]
fn motion_zero_delta_and_noise_free_forward() {
    let cfg = MclConfig::default();
    let mut ps = init_particles(Pose2D::new(0.0, 0.0, 0.0), [0.5, 0.5, 1.0], 500, &cfg).unwrap();
    let before = ps.clone();
    let o = Pose2D::new(3.0, 4.0, 1.0);
    motion_update(&mut ps, &o, &o, [0.5; 4], 1, 1);
    assert_eq!(ps, before);
    let fwd = o.compose(&Pose2D::new(1.0, 0.0, 0.0));
    motion_update(&mut ps, &o, &fwd, [0.0; 4], 1, 2);
    for (a, b) in before.particles.iter().zip(&ps.particles) {
        let moved = b.pose.position() - a.pose.position();
        assert!((moved.norm() - 1.0).abs() < 1e-12);
        assert!(crate::geometry::angle_diff(moved.y.atan2(moved.x), a.pose.theta).abs() < 1e-9);
        assert!(crate::geometry::angle_diff(b.pose.theta, a.pose.theta).abs() < 1e-12);
        assert_eq!(a.weight, b.weight);
    }
}

#[test]
fn motion_noise_matches_model() {
    let a = [0.1, 0.05, 0.1, 0.05];
    let mut ps = init_particles(Pose2D::default(), [0.0; 3], 100_000, &big_config()).unwrap();
    motion_update(&mut ps, &Pose2D::default(), &Pose2D::new(1.0, 0.0, 0.0), a, 9, 0);
    // pure translation: rot1 ~ N(0, a2), trans ~ N(1, a3), rot2 ~ N(0, a2)
    let (s1, st, s2) = motion_noise_std(0.0, 1.0, 0.0, a);
    assert_eq!((s1, st, s2), (0.05, 0.1, 0.05));
    let dist: Vec<f64> = ps.particles.iter().map(|p| p.pose.position().norm()).collect();
    let head: Vec<f64> = ps.particles.iter().map(|p| p.pose.theta).collect();
    let bearing: Vec<f64> = ps.particles.iter().map(|p| p.pose.y.atan2(p.pose.x)).collect();
    assert!((std_dev(&dist) / st - 1.0).abs() < 0.05);
    assert!((std_dev(&bearing) / s1 - 1.0).abs() < 0.05);
    assert!((std_dev(&head) / (s1 * s1 + s2 * s2).sqrt() - 1.0).abs() < 0.05);
}

#[test]
fn beam_factor_formula_and_dominance() {
    let g = room();
    let cfg = MclConfig::default();
    let field = likelihood_field(&g, cfg.sigma_hit, cfg.saturation_distance).unwrap();
    // pose 1.0 m in front of the west wall looking at it
    let wall = g.cell_to_world(CellIndex::new(0, 80));
    let pose = Pose2D::new(wall.x + 1.0, wall.y, PI);
    let beams = [Point2::new(1.0, 0.0)];
    let ll = scan_log_likelihood(&pose, &beams, &field, &Pose2D::default(), 20.0, &cfg);
    assert!((ll - (cfg.z_hit + cfg.z_rand / 20.0).ln()).abs() < 1e-12);
    // same beam in open space far from structure: field at floor
    let lost = Pose2D::new(-100.0, -100.0, 0.0);
    let ll_lost = scan_log_likelihood(&lost, &beams, &field, &Pose2D::default(), 20.0, &cfg);
    assert!((ll_lost - (cfg.z_hit * field.floor() + cfg.z_rand / 20.0).ln()).abs() < 1e-12);
    assert!(ll_lost < ll);
}

#[test]
fn ground_truth_particle_wins() {
    let g = room();
    let cfg = MclConfig::default();
    let field = likelihood_field(&g, cfg.sigma_hit, cfg.saturation_distance).unwrap();
    let truth = Pose2D::new(5.0, 3.0, 0.4);
    let scan = scan_at(&g, &truth, 0.0, 360, 20.0);
    let mut ps = ParticleSet::uniform(vec![truth, Pose2D::new(7.0, 3.0, 0.4)]);
    sensor_update(&mut ps, &scan, &field, &Pose2D::default(), 20.0, &cfg).unwrap();
    assert!(ps.particles[0].weight > ps.particles[1].weight);
    assert!((ps.weight_sum() - 1.0).abs() < 1e-9);
}

#[test]
fn incompatible_measurement_is_signalled() {
    let g = room();
    let cfg = MclConfig {
        z_hit: 1.0,
        z_rand: 0.0,
        sigma_hit: 0.01,
        ..MclConfig::default()
    };
    let field = likelihood_field(&g, cfg.sigma_hit, cfg.saturation_distance).unwrap();
    let scan = scan_at(&g, &Pose2D::new(5.0, 3.0, 0.0), 0.0, 360, 20.0);
    let mut ps = ParticleSet::uniform(vec![Pose2D::new(-50.0, -50.0, 0.0)]);
    let before = ps.clone();
    assert!(matches!(
        sensor_update(&mut ps, &scan, &field, &Pose2D::default(), 20.0, &cfg),
        Err(crate::EvalError::MeasurementIncompatible)
    ));
    assert_eq!(ps, before);
}

#[test]
fn ess_examples() {
    let poses = vec![Pose2D::default(); 4];
    let mut ps = ParticleSet::uniform(poses.clone());
    assert!((effective_sample_size(&ps).unwrap() - 4.0).abs() < 1e-12);
    for (p, w) in ps.particles.iter_mut().zip([0.5, 0.5, 0.0, 0.0]) {
        p.weight = w;
    }
    assert!((effective_sample_size(&ps).unwrap() - 2.0).abs() < 1e-12);
    for (p, w) in ps.particles.iter_mut().zip([1.0, 0.0, 0.0, 0.0]) {
        p.weight = w;
    }
    assert_eq!(effective_sample_size(&ps).unwrap(), 1.0);
    ps.normalized = false;
    assert!(effective_sample_size(&ps).is_err());
}

#[test]
fn resample_collapses_to_n_min_copies() {
    let cfg = MclConfig::default();
    let mut ps = init_particles(Pose2D::default(), [1.0, 1.0, 0.5], 1000, &cfg).unwrap();
    for (i, p) in ps.particles.iter_mut().enumerate() {
        p.weight = if i == 17 { 1.0 } else { 0.0 };
    }
    let target = ps.particles[17].pose;
    let out = resample_kld(&ps, &cfg, 0).unwrap();
    assert_eq!(out.len(), cfg.n_min);
    assert!(out.particles.iter().all(|p| p.pose == target));
    assert!((out.weight_sum() - 1.0).abs() < 1e-9);
}

#[test]
fn kld_count_matches_independent_formula() {
    let cfg = MclConfig {
        n_min: 10,
        n_max: 6000,
        ..MclConfig::default()
    };
    let z = 2.326_347_874_040_841; // upper 1% standard normal quantile
    let expected = |k: usize| -> usize {
        let km = (k - 1) as f64;
        let n = km / (2.0 * 0.01) * (1.0 - 2.0 / (9.0 * km) + (2.0 / (9.0 * km)).sqrt() * z).powi(3);
        (n.ceil() as usize).clamp(10, 6000)
    };
    let mut last = 0;
    for k in [2usize, 5, 20, 60] {
        // n_max particles placed at the centres of k distinct bins
        let poses = (0..cfg.n_max)
            .map(|i| {
                let b = (i % k) as f64;
                Pose2D::new(0.25 + 0.5 * b, 0.25, 0.01)
            })
            .collect();
        let out = resample_kld(&ParticleSet::uniform(poses), &cfg, 3).unwrap();
        assert_eq!(out.len(), expected(k), "k = {k}");
        assert!(out.len() >= last);
        last = out.len();
    }
}

#[test]
fn resampling_preserves_weighted_mean() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let cfg = MclConfig {
        n_min: 100,
        n_max: 100,
        ..MclConfig::default()
    };
    let mut ps = ParticleSet::uniform((0..100).map(|i| Pose2D::new(i as f64 * 0.1, 0.0, 0.0)).collect());
    for p in ps.particles.iter_mut() {
        p.weight = rng.random::<f64>();
    }
    ps.normalize().unwrap();
    let mean: f64 = ps.particles.iter().map(|p| p.weight * p.pose.x).sum();
    let diffs: Vec<f64> = (0..1000)
        .map(|trial| {
            let out = resample_kld(&ps, &cfg, trial).unwrap();
            out.particles.iter().map(|p| p.pose.x).sum::<f64>() / out.len() as f64 - mean
        })
        .collect();
    let drift = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let se = std_dev(&diffs) / (diffs.len() as f64).sqrt();
    assert!(drift.abs() < 3.0 * se.max(1e-12), "drift {drift} se {se}");
}

#[test]
fn estimate_pose_examples() {
    let p = Pose2D::new(1.0, -2.0, 0.7);
    let (e, cov) = estimate_pose(&ParticleSet::uniform(vec![p; 5])).unwrap();
    assert!((e.x - p.x).abs() < 1e-12 && (e.y - p.y).abs() < 1e-12 && (e.theta - p.theta).abs() < 1e-12);
    assert!(cov.xx < 1e-20 && cov.theta < 1e-12);
    let pair = ParticleSet::uniform(vec![
        Pose2D::new(0.0, 0.0, 170f64.to_radians()),
        Pose2D::new(0.0, 0.0, -170f64.to_radians()),
    ]);
    let (e, _) = estimate_pose(&pair).unwrap();
    assert!((e.theta.abs() - PI).abs() < 1e-12);
    let mut two = ParticleSet::uniform(vec![p, Pose2D::new(9.0, 9.0, -1.0)]);
    two.particles[0].weight = 1.0;
    two.particles[1].weight = 0.0;
    let (e, _) = estimate_pose(&two).unwrap();
    assert_eq!((e.x, e.y), (p.x, p.y));
    assert!((e.theta - p.theta).abs() < 1e-15);
    assert!(estimate_pose(&ParticleSet::uniform(Vec::new())).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn estimate_rotates_with_particles(
        thetas in proptest::collection::vec(-0.8f64..0.8, 2..30),
        phi in -PI..PI,
    ) {
        let ps = ParticleSet::uniform(thetas.iter().map(|t| Pose2D::new(0.0, 0.0, *t)).collect());
        let rot = ParticleSet::uniform(thetas.iter().map(|t| Pose2D::new(0.0, 0.0, t + phi)).collect());
        let (a, _) = estimate_pose(&ps).unwrap();
        let (b, _) = estimate_pose(&rot).unwrap();
        prop_assert!(crate::geometry::angle_diff(b.theta, a.theta + phi).abs() < 1e-9);
    }

    #[test]
    fn updates_keep_weights_normalized_and_count_bounded(seed in any::<u64>(), dx in 0.0f64..0.5) {
        let g = room();
        let cfg = MclConfig { n_min: 50, n_max: 400, seed, ..MclConfig::default() };
        let field = likelihood_field(&g, cfg.sigma_hit, cfg.saturation_distance).unwrap();
        let truth = Pose2D::new(5.0 + dx, 3.0, 0.2);
        let mut ps = init_particles(truth, [0.3, 0.3, 0.1], 400, &cfg).unwrap();
        motion_update(&mut ps, &Pose2D::default(), &Pose2D::new(dx, 0.0, 0.0), cfg.alphas, seed, 1);
        sensor_update(&mut ps, &scan_at(&g, &truth, 0.0, 90, 20.0), &field, &Pose2D::default(), 20.0, &cfg).unwrap();
        prop_assert!((ps.weight_sum() - 1.0).abs() < 1e-9);
        prop_assert!(ps.particles.iter().all(|p| p.weight >= 0.0));
        let out = resample_kld(&ps, &cfg, 1).unwrap();
        prop_assert!((50..=400).contains(&out.len()));
        prop_assert!((out.weight_sum() - 1.0).abs() < 1e-9);
    }
}

fn drive_log(g: &OccupancyGrid) -> (SensorLog, Vec<TimedPose>) {
    // straight run along y = 4 then a turn north
    let mut truth = Vec::new();
    let mut frames = Vec::new();
    for i in 0..60 {
        let t = i as f64 * 0.25;
        let pose = if i < 40 {
            Pose2D::new(2.0 + 0.15 * i as f64, 4.0, 0.0)
        } else {
            Pose2D::new(8.0, 4.0 + 0.1 * (i - 40) as f64, PI / 2.0)
        };
        truth.push(TimedPose { t, pose });
        frames.push(Frame::Odom(OdomFrame { timestamp: t, pose }));
        frames.push(Frame::Scan(scan_at(g, &pose, t, 180, 20.0)));
    }
    (
        SensorLog {
            mount: Pose2D::default(),
            max_range: 20.0,
            frames,
            checkpoints: Vec::new(),
        },
        truth,
    )
}

#[test]
fn noise_free_replay_tracks_ground_truth() {
    let g = room();
    let (log, truth) = drive_log(&g);
    let cfg = MclConfig {
        alphas: [0.05; 4],
        n_min: 200,
        n_max: 1000,
        seed: 42,
        ..MclConfig::default()
    };
    let traj = run_replay(&g, &log, &cfg, truth[0].pose).unwrap();
    assert_eq!(traj.entries.len(), 60);
    let last = traj.entries.last().unwrap();
    let err = last.pose.position().dist(truth.last().unwrap().pose.position());
    assert!(err <= 3.0 * g.resolution(), "final error {err}");
    assert!(traj.annotations.is_empty());
    assert!(traj.entries.iter().all(|e| (200..=1000).contains(&e.particles)));

    let again = run_replay(&g, &log, &cfg, truth[0].pose).unwrap();
    assert_eq!(traj.to_csv(), again.to_csv());
    assert_eq!(traj, again);
}

#[test]
fn replay_rejects_start_outside_map() {
    let g = room();
    let (log, _) = drive_log(&g);
    assert!(run_replay(&g, &log, &MclConfig::default(), Pose2D::new(-3.0, 0.0, 0.0)).is_err());
}

#[test]
fn replay_is_thread_count_independent() {
    let g = room();
    let (log, truth) = drive_log(&g);
    let cfg = MclConfig {
        n_min: 100,
        n_max: 400,
        seed: 3,
        ..MclConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| run_replay(&g, &log, &cfg, truth[0].pose).unwrap());
    let parallel = run_replay(&g, &log, &cfg, truth[0].pose).unwrap();
    assert_eq!(serial, parallel);
}
