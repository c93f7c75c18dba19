//! End-to-end use of the library: simulate a drive, store and reload every
//! artifact, then evaluate maps and replay the log against them.

use std::sync::OnceLock;

use mapbench::gridmap::{load_map_yaml, save_map};
use mapbench::mapmetrics::{map_quality_report, read_references, write_references, Metric, ReportConfig};
use mapbench::mcl::{checkpoint_deviation, detect_divergence, run_replay, MclConfig, SensorLog};
use mapbench::simharness::{
    build_map, campus_world, checkpoints_to_csv, poses_to_csv, rasterize, read_checkpoints_csv, read_poses_csv,
    simulate_drive, DegradationProfile, GroundTruthLog, ScenarioConfig, TlsProfile,
};
use mapbench::OccupancyGrid;

struct Campus {
    log: SensorLog,
    gt: GroundTruthLog,
    truth: OccupancyGrid,
    tls: OccupancyGrid,
}

fn campus() -> &'static Campus {
    static CAMPUS: OnceLock<Campus> = OnceLock::new();
    CAMPUS.get_or_init(|| {
        let world = campus_world(0);
        let scenario = ScenarioConfig::default();
        let (log, gt) = simulate_drive(&world, &scenario).unwrap();
        let truth = rasterize(&world, scenario.resolution, &world.bounds).unwrap();
        let tls = build_map(
            &DegradationProfile::TlsLike(TlsProfile::default()),
            &world,
            &truth,
            &gt.poses,
            0,
        )
        .unwrap();
        Campus { log, gt, truth, tls }
    })
}

#[test]
fn artifacts_survive_a_disk_round_trip() {
    let c = campus();
    let dir = tempfile::tempdir().unwrap();

    let (pgm, yaml) = (dir.path().join("tls.pgm"), dir.path().join("tls.yaml"));
    save_map(&c.tls, &pgm, &yaml).unwrap();
    assert_eq!(load_map_yaml(&yaml).unwrap(), c.tls);

    let log_path = dir.path().join("sensor.jsonl");
    c.log.save(&log_path).unwrap();
    assert_eq!(SensorLog::load(&log_path).unwrap().to_jsonl(), c.log.to_jsonl());

    let mut refs = Vec::new();
    write_references(&mut refs, &c.gt.references).unwrap();
    assert_eq!(read_references(refs.as_slice()).unwrap(), c.gt.references);

    let poses = dir.path().join("poses.csv");
    std::fs::write(&poses, poses_to_csv(&c.gt.poses)).unwrap();
    assert_eq!(read_poses_csv(&poses).unwrap(), c.gt.poses);

    let checkpoints = dir.path().join("checkpoints.csv");
    std::fs::write(&checkpoints, checkpoints_to_csv(&c.gt.checkpoints)).unwrap();
    assert_eq!(read_checkpoints_csv(&checkpoints).unwrap(), c.gt.checkpoints);
}

#[test]
fn truth_against_itself_scores_perfectly() {
    let c = campus();
    let report = map_quality_report(&c.truth, &c.truth, Some(&c.gt.references), &ReportConfig::default());
    assert_eq!(report.adnn.value(), Some(&0.0));
    assert_eq!(report.hausdorff.value(), Some(&0.0));
    assert!((report.ssim.value().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(report.corner_match_ratio.value(), Some(&1.0));
    let icp = report.icp.value().unwrap();
    assert!(icp.transform.theta.abs() < 1e-9 && icp.transform.tx.abs() < 1e-9 && icp.transform.ty.abs() < 1e-9);
    assert!(report.geometric.value().unwrap().average < 1e-9);
}

#[test]
fn degraded_map_scores_worse_and_skips_geometry_without_references() {
    let c = campus();
    let report = map_quality_report(&c.tls, &c.truth, None, &ReportConfig::default());
    assert!(matches!(report.geometric, Metric::NotComputed { .. }));
    assert!(*report.adnn.value().unwrap() > 0.0);
    assert!(*report.ssim.value().unwrap() < 1.0);
}

#[test]
fn replay_is_seed_deterministic_and_tracks_the_start() {
    let c = campus();
    let mcl = MclConfig::default();
    let start = c.gt.poses[0].pose;
    let a = run_replay(&c.tls, &c.log, &mcl, start).unwrap();
    let b = run_replay(&c.tls, &c.log, &mcl, start).unwrap();
    assert_eq!(a.timed_poses(), b.timed_poses());

    let early: Vec<_> = c.gt.checkpoints.iter().take(3).cloned().collect();
    assert!(checkpoint_deviation(&a, &early).unwrap().average < 0.25);

    let diverged = detect_divergence(&a.timed_poses(), &c.gt.poses, 1.0, 5.0).unwrap();
    assert!(diverged.is_none_or(|t| t > early.last().unwrap().timestamp));
}
