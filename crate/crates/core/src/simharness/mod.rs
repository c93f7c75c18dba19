//! Simulation harness: vector worlds, map degradation and drive recording.

mod drive;
mod raster;
mod world;

pub use drive::{
    cast, checkpoints_to_csv, generate_reference_pairs, place_checkpoints, plan_trajectory, poses_to_csv, ray_segment,
    read_checkpoints_csv, read_poses_csv, reference_candidates, simulate_drive, simulate_odometry, simulate_scan,
    write_text, DriftConfig, GroundTruthLog, PointPair, ScanConfig, ScenarioConfig, CORNER_BLEND,
};
pub use raster::{
    build_map, degrade_slam, degrade_tls, derive_pabc, rasterize, snap, DegradationProfile, PabcProfile, SlamProfile,
    TlsProfile, WarpField,
};
pub use world::{
    campus_route, campus_world, Bounds, ElementTag, Segment, Shape, VectorWorld, WorldElement, CAMPUS_CORRIDOR_X,
    CAMPUS_CORRIDOR_Y,
};
