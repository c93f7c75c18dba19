use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::filter::{
    effective_sample_size, estimate_pose, init_particles, likelihood_field, motion_update, resample_kld, sensor_update,
    LikelihoodField, PoseCovariance,
};
use super::log::{Frame, OdomFrame, SensorLog};
use super::trajectory::TimedPose;
use super::MclConfig;
use crate::error::{EvalError, MapError};
use crate::geometry::Pose2D;
use crate::gridmap::OccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub timestamp: f64,
    pub pose: Pose2D,
    pub covariance: PoseCovariance,
    /// Effective sample size after the measurement update.
    pub ess: f64,
    pub particles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayAnnotation {
    pub timestamp: f64,
    pub frame: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    pub entries: Vec<TrajectoryEntry>,
    pub annotations: Vec<ReplayAnnotation>,
}

impl TrajectoryEstimate {
    pub fn timed_poses(&self) -> Vec<TimedPose> {
        self.entries
            .iter()
            .map(|e| TimedPose {
                t: e.timestamp,
                pose: e.pose,
            })
            .collect()
    }

    pub const CSV_HEADER: &'static str = "t,x,y,theta,ess";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.timestamp, e.pose.x, e.pose.y, e.pose.theta, e.ess
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MapError> {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv().as_bytes()))
            .map_err(|source| MapError::Io {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Reads the poses of a trajectory CSV (other columns ignored).
    pub fn read_csv_poses(path: &Path) -> Result<Vec<TimedPose>, EvalError> {
        let mut rdr =
            csv::Reader::from_path(path).map_err(|e| EvalError::InvalidInput(format!("{}: {e}", path.display())))?;
        let mut out = Vec::new();
        for rec in rdr.deserialize::<(f64, f64, f64, f64, f64)>() {
            let (t, x, y, theta, _) = rec.map_err(|e| EvalError::InvalidInput(format!("{}: {e}", path.display())))?;
            out.push(TimedPose {
                t,
                pose: Pose2D::new(x, y, theta),
            });
        }
        Ok(out)
    }
}

/// Odometry pose at `t`: interpolated between bracketing frames, held at
/// the last frame beyond the end.
fn odom_at(odom: &[OdomFrame], t: f64) -> Pose2D {
    let k = odom.partition_point(|o| o.timestamp <= t);
    if k == 0 {
        return odom[0].pose;
    }
    if k == odom.len() {
        return odom[k - 1].pose;
    }
    let (a, b) = (&odom[k - 1], &odom[k]);
    a.pose
        .interpolate(&b.pose, (t - a.timestamp) / (b.timestamp - a.timestamp))
}

pub fn run_replay(
    grid: &OccupancyGrid,
    log: &SensorLog,
    config: &MclConfig,
    initial_pose: Pose2D,
) -> Result<TrajectoryEstimate, EvalError> {
    if grid.world_to_cell(initial_pose.position()).is_none() {
        return Err(EvalError::InvalidInput(format!(
            "initial pose ({:.3}, {:.3}) lies outside the map",
            initial_pose.x, initial_pose.y
        )));
    }
    config.validate()?;
    let field = likelihood_field(grid, config.sigma_hit, config.saturation_distance)?;
    run_replay_with_field(&field, log, config, initial_pose)
}

/// Replay against a prebuilt likelihood field.
pub fn run_replay_with_field(
    field: &LikelihoodField,
    log: &SensorLog,
    config: &MclConfig,
    initial_pose: Pose2D,
) -> Result<TrajectoryEstimate, EvalError> {
    config.validate()?;
    log.validate()?;
    let odom = log.odometry();
    let mut particles = init_particles(initial_pose, config.init_std, config.n_max, config)?;
    let mut out = TrajectoryEstimate::default();
    let mut prev: Option<Pose2D> = None;
    for (frame, scan) in log
        .frames
        .iter()
        .filter_map(|f| match f {
            Frame::Scan(s) => Some(s),
            Frame::Odom(_) => None,
        })
        .enumerate()
    {
        let now = odom_at(&odom, scan.timestamp);
        if let Some(prev) = prev {
            motion_update(&mut particles, &prev, &now, config.alphas, config.seed, frame as u64);
        }
        prev = Some(now);
        if let Err(e) = sensor_update(&mut particles, scan, field, &log.mount, log.max_range, config) {
            match e {
                EvalError::MeasurementIncompatible => {
                    particles.reset_weights();
                    out.annotations.push(ReplayAnnotation {
                        timestamp: scan.timestamp,
                        frame,
                        message: "measurement incompatible with all particles; weights reset".into(),
                    });
                }
                other => return Err(other),
            }
        }
        let ess = effective_sample_size(&particles)?;
        let (pose, covariance) = estimate_pose(&particles)?;
        out.entries.push(TrajectoryEntry {
            timestamp: scan.timestamp,
            pose,
            covariance,
            ess,
            particles: particles.len(),
        });
        if ess / (particles.len() as f64) < config.resample_threshold {
            particles = resample_kld(&particles, config, frame as u64)?;
        }
    }
    Ok(out)
}
