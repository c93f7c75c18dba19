//! Route planning, scan and odometry simulation, and whole-drive recording.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::world::{campus_route, ElementTag, Segment, VectorWorld};
use crate::error::{EvalError, MapError};
use crate::geometry::{lerp_angle, Point2, Pose2D};
use crate::mapmetrics::ReferenceMeasurement;
use crate::mcl::{interpolate_pose, Checkpoint, Frame, OdomFrame, ScanFrame, SensorLog, TimedPose};
use crate::rng::{stream, tag};

/// Half-length of the stretch over which headings blend at a corner.
pub const CORNER_BLEND: f64 = 0.5;

/// Constant-speed poses along the polyline, sampled every `dt` seconds;
/// the final pose sits exactly on the last waypoint.
pub fn plan_trajectory(waypoints: &[Point2], speed: f64, dt: f64) -> Result<Vec<TimedPose>, EvalError> {
    if waypoints.len() < 2 {
        return Err(EvalError::InvalidInput("need at least two waypoints".into()));
    }
    if !(speed > 0.0 && dt > 0.0) {
        return Err(EvalError::InvalidInput("speed and dt must be positive".into()));
    }
    let mut pts: Vec<Point2> = vec![waypoints[0]];
    for w in &waypoints[1..] {
        if w.dist(*pts.last().unwrap()) > 0.0 {
            pts.push(*w);
        }
    }
    if pts.len() < 2 {
        return Err(EvalError::InvalidInput("waypoints span no distance".into()));
    }
    let seg_len: Vec<f64> = pts.windows(2).map(|p| p[0].dist(p[1])).collect();
    let heading: Vec<f64> = pts
        .windows(2)
        .map(|p| (p[1].y - p[0].y).atan2(p[1].x - p[0].x))
        .collect();
    let mut start = vec![0.0];
    for l in &seg_len {
        start.push(start.last().unwrap() + l);
    }
    let total = *start.last().unwrap();
    let blend: Vec<f64> = (1..seg_len.len())
        .map(|j| CORNER_BLEND.min(0.5 * seg_len[j - 1]).min(0.5 * seg_len[j]))
        .collect();

    let at = |s: f64| -> Pose2D {
        let j = (start.partition_point(|v| *v <= s) - 1).min(seg_len.len() - 1);
        let p = pts[j].lerp(pts[j + 1], ((s - start[j]) / seg_len[j]).clamp(0.0, 1.0));
        let mut theta = heading[j];
        // corner at the start of segment j
        if j > 0 && s - start[j] < blend[j - 1] {
            let b = blend[j - 1];
            theta = lerp_angle(heading[j - 1], heading[j], (s - start[j] + b) / (2.0 * b));
        }
        // corner at the end of segment j
        if j + 1 < seg_len.len() && start[j + 1] - s < blend[j] {
            let b = blend[j];
            theta = lerp_angle(heading[j], heading[j + 1], (s - start[j + 1] + b) / (2.0 * b));
        }
        Pose2D::new(p.x, p.y, theta)
    };

    let duration = total / speed;
    let steps = (duration / dt + 1e-9).floor() as usize;
    let mut out: Vec<TimedPose> = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            TimedPose {
                t,
                pose: at((t * speed).min(total)),
            }
        })
        .collect();
    let end = Pose2D::new(pts.last().unwrap().x, pts.last().unwrap().y, *heading.last().unwrap());
    let last = out.last_mut().expect("at least one sample");
    if (last.t * speed - total).abs() <= 1e-9 * total.max(1.0) {
        last.pose = end;
    } else {
        // the route ends between samples; close it with a shorter final step
        out.push(TimedPose { t: duration, pose: end });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub beams: usize,
    /// Field of view in radians, centred on the sensor's x axis.
    pub fov: f64,
    pub range_sigma: f64,
    pub max_range: f64,
    pub dropout: f64,
    /// Extra range noise on returns from noisy contours.
    pub noisy_contour_sigma: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            beams: 360,
            fov: std::f64::consts::TAU,
            range_sigma: 0.02,
            max_range: 20.0,
            dropout: 0.01,
            noisy_contour_sigma: 0.4,
        }
    }
}

impl ScanConfig {
    pub fn bearings(&self) -> Vec<f64> {
        let n = self.beams;
        let full = (self.fov - std::f64::consts::TAU).abs() < 1e-12;
        (0..n)
            .map(|i| {
                if full {
                    -std::f64::consts::PI + self.fov * i as f64 / n as f64
                } else if n == 1 {
                    0.0
                } else {
                    -0.5 * self.fov + self.fov * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Distance along the ray `o + t·d` to segment `ab`, if they meet.
pub fn ray_segment(o: Point2, d: Point2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    let denom = d.cross(e);
    if denom == 0.0 {
        return None;
    }
    let ao = a - o;
    let t = ao.cross(e) / denom;
    let s = ao.cross(d) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
}

fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let e = b - a;
    let l2 = e.dot(e);
    let s = if l2 > 0.0 {
        ((p - a).dot(e) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(a + e * s)
}

/// Exact range and tag of the first element hit by the ray.
pub fn cast(segments: &[Segment], origin: Point2, bearing: f64) -> Option<(f64, ElementTag)> {
    let d = Point2::new(bearing.cos(), bearing.sin());
    segments
        .iter()
        .filter_map(|s| ray_segment(origin, d, s.a, s.b).map(|t| (t, s.tag)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Simulates one scan from the sensor pose. Beam `i` of frame `frame` uses
/// the stream `(seed, SCAN, frame, i)`.
pub fn simulate_scan(
    segments: &[Segment],
    sensor_pose: &Pose2D,
    config: &ScanConfig,
    timestamp: f64,
    seed: u64,
    frame: u64,
) -> ScanFrame {
    let o = sensor_pose.position();
    let near: Vec<Segment> = segments
        .iter()
        .filter(|s| point_segment_dist(o, s.a, s.b) <= config.max_range)
        .copied()
        .collect();
    let bearings = config.bearings();
    let ranges = bearings
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut rng = stream(seed, &[tag::SCAN, frame, i as u64]);
            let noise: f64 = rng.sample(StandardNormal);
            let extra: f64 = rng.sample(StandardNormal);
            let drop = rng.random::<f64>() < config.dropout;
            match cast(&near, o, sensor_pose.theta + b) {
                Some((r, t)) if r < config.max_range && !drop => {
                    let mut z = r + config.range_sigma * noise;
                    if t == ElementTag::NoisyContour {
                        z += config.noisy_contour_sigma * extra;
                    }
                    z.clamp(0.0, config.max_range)
                }
                _ => config.max_range,
            }
        })
        .collect();
    ScanFrame {
        timestamp,
        bearings,
        ranges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    /// Fractional over-reading of distance travelled.
    pub trans_bias: f64,
    /// Heading drift in radians per meter.
    pub rot_bias: f64,
    /// Std of the distance error per meter travelled.
    pub trans_noise: f64,
    /// Std of the heading error (radians) per meter travelled.
    pub rot_noise: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            trans_bias: 0.08,
            rot_bias: 0.0,
            trans_noise: 0.01,
            rot_noise: 0.002,
        }
    }
}

impl DriftConfig {
    fn is_zero(&self) -> bool {
        self.trans_bias == 0.0 && self.rot_bias == 0.0 && self.trans_noise == 0.0 && self.rot_noise == 0.0
    }
}

/// Odometry integrating corrupted true relative motions, starting at the
/// first true pose. Step `i` draws from the stream `(seed, ODOM, i)`.
pub fn simulate_odometry(truth: &[TimedPose], drift: &DriftConfig, seed: u64) -> Result<Vec<OdomFrame>, EvalError> {
    if truth.len() < 2 {
        return Err(EvalError::InvalidInput("need at least two poses".into()));
    }
    if drift.is_zero() {
        return Ok(truth
            .iter()
            .map(|p| OdomFrame {
                timestamp: p.t,
                pose: p.pose,
            })
            .collect());
    }
    let mut out = vec![OdomFrame {
        timestamp: truth[0].t,
        pose: truth[0].pose,
    }];
    for (i, w) in truth.windows(2).enumerate() {
        let rel = w[0].pose.between(&w[1].pose);
        let dist = rel.position().norm();
        let mut rng = stream(seed, &[tag::ODOM, i as u64]);
        let nt: f64 = rng.sample(StandardNormal);
        let nr: f64 = rng.sample(StandardNormal);
        let scale = 1.0 + drift.trans_bias + drift.trans_noise * nt;
        let dtheta = drift.rot_bias * dist + drift.rot_noise * dist * nr;
        let noisy = Pose2D::new(rel.x * scale, rel.y * scale, rel.theta + dtheta);
        let prev = out.last().unwrap().pose;
        out.push(OdomFrame {
            timestamp: w[1].t,
            pose: prev.compose(&noisy),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub resolution: f64,
    pub waypoints: Vec<Point2>,
    pub speed: f64,
    pub scan_rate: f64,
    pub scan: ScanConfig,
    pub drift: DriftConfig,
    /// Sensor pose in the robot frame.
    pub mount: Pose2D,
    pub checkpoints: usize,
    pub reference_pairs: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            resolution: crate::gridmap::DEFAULT_RESOLUTION,
            waypoints: campus_route(),
            speed: 1.0,
            scan_rate: 4.0,
            scan: ScanConfig::default(),
            drift: DriftConfig::default(),
            mount: Pose2D::default(),
            checkpoints: 12,
            reference_pairs: 25,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, world: &VectorWorld) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidInput(m));
        if !(self.resolution > 0.0 && self.speed > 0.0 && self.scan_rate > 0.0) {
            return bad("resolution, speed and scan_rate must be positive".into());
        }
        if self.scan.beams == 0 || !(self.scan.max_range > 0.0) || !(0.0..=1.0).contains(&self.scan.dropout) {
            return bad("scan needs beams > 0, max_range > 0 and dropout in [0, 1]".into());
        }
        if !(self.scan.fov > 0.0 && self.scan.fov <= std::f64::consts::TAU) {
            return bad("fov must lie in (0, 2π]".into());
        }
        if let Some(w) = self.waypoints.iter().find(|w| !world.bounds.contains(**w)) {
            return bad(format!("waypoint ({}, {}) lies outside the world", w.x, w.y));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLog {
    pub poses: Vec<TimedPose>,
    pub checkpoints: Vec<Checkpoint>,
    pub references: Vec<ReferenceMeasurement>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> MapError + '_ {
    move |source| MapError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> EvalError {
    EvalError::InvalidInput(format!("{}: {e}", path.display()))
}

pub fn poses_to_csv(poses: &[TimedPose]) -> String {
    let mut s = String::from("t,x,y,theta\n");
    for p in poses {
        s.push_str(&format!("{},{},{},{}\n", p.t, p.pose.x, p.pose.y, p.pose.theta));
    }
    s
}

pub fn checkpoints_to_csv(checkpoints: &[Checkpoint]) -> String {
    let mut s = String::from("id,t,x,y,theta\n");
    for c in checkpoints {
        let p = c.ground_truth_pose;
        s.push_str(&format!("{},{},{},{},{}\n", c.id, c.timestamp, p.x, p.y, p.theta));
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), MapError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_poses_csv(path: &Path) -> Result<Vec<TimedPose>, EvalError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize::<(f64, f64, f64, f64)>()
        .map(|r| {
            let (t, x, y, theta) = r.map_err(|e| csv_err(path, e))?;
            Ok(TimedPose {
                t,
                pose: Pose2D::new(x, y, theta),
            })
        })
        .collect()
}

pub fn read_checkpoints_csv(path: &Path) -> Result<Vec<Checkpoint>, EvalError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize::<(u32, f64, f64, f64, f64)>()
        .map(|r| {
            let (id, t, x, y, theta) = r.map_err(|e| csv_err(path, e))?;
            Ok(Checkpoint {
                id,
                timestamp: t,
                ground_truth_pose: Pose2D::new(x, y, theta),
            })
        })
        .collect()
}

pub type PointPair = (Point2, Point2);

/// Candidate reference pairs: every building facade of at least 2 m, and
/// the closest corner pair of every two buildings less than 40 m apart.
pub fn reference_candidates(world: &VectorWorld) -> (Vec<PointPair>, Vec<PointPair>) {
    let buildings: Vec<_> = world.buildings().collect();
    let facades = buildings
        .iter()
        .flat_map(|b| b.edges())
        .filter(|(a, b)| a.dist(*b) >= 2.0)
        .collect();
    let mut between = Vec::new();
    for i in 0..buildings.len() {
        for j in i + 1..buildings.len() {
            let mut best: Option<(f64, Point2, Point2)> = None;
            for a in &buildings[i].vertices {
                for b in &buildings[j].vertices {
                    let d = a.dist(*b);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, *a, *b));
                    }
                }
            }
            if let Some((d, a, b)) = best {
                if d > 0.0 && d <= 40.0 {
                    between.push((a, b));
                }
            }
        }
    }
    (facades, between)
}

/// `n` reference pairs alternating between inter-building distances and
/// facade lengths, drawn without replacement.
pub fn generate_reference_pairs(
    world: &VectorWorld,
    n: usize,
    seed: u64,
) -> Result<Vec<ReferenceMeasurement>, EvalError> {
    if world.buildings().map(|b| b.vertices.len()).sum::<usize>() < 2 {
        return Err(EvalError::InvalidInput(
            "world needs at least two building vertices".into(),
        ));
    }
    let (mut facades, mut between) = reference_candidates(world);
    if facades.len() + between.len() < n {
        return Err(EvalError::InvalidInput(format!(
            "only {} reference candidates for {n} pairs",
            facades.len() + between.len()
        )));
    }
    let mut rng = stream(seed, &[tag::REFS]);
    facades.shuffle(&mut rng);
    between.shuffle(&mut rng);
    let (mut f, mut b) = (facades.into_iter(), between.into_iter());
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pick = if out.len() % 2 == 0 {
            b.next().or_else(|| f.next())
        } else {
            f.next().or_else(|| b.next())
        };
        let (p, q) = pick.expect("enough candidates");
        out.push(ReferenceMeasurement::new(
            format!("R{:02}", out.len() + 1),
            p,
            q,
            p.dist(q),
        )?);
    }
    Ok(out)
}

/// Evenly time-spaced checkpoints `t_k = k·T/n`, `k = 0..n`.
pub fn place_checkpoints(truth: &[TimedPose], n: usize) -> Vec<Checkpoint> {
    let (Some(first), Some(last)) = (truth.first(), truth.last()) else {
        return Vec::new();
    };
    let span = last.t - first.t;
    (0..n)
        .map(|k| {
            let t = first.t + span * k as f64 / n as f64;
            Checkpoint {
                id: k as u32 + 1,
                timestamp: t,
                ground_truth_pose: interpolate_pose(truth, t).expect("inside span"),
            }
        })
        .collect()
}

pub fn simulate_drive(
    world: &VectorWorld,
    scenario: &ScenarioConfig,
) -> Result<(SensorLog, GroundTruthLog), EvalError> {
    world.validate()?;
    scenario.validate(world)?;
    let truth = plan_trajectory(&scenario.waypoints, scenario.speed, 1.0 / scenario.scan_rate)?;
    let odom = simulate_odometry(&truth, &scenario.drift, scenario.seed)?;
    let segments = world.segments();
    let scans: Vec<ScanFrame> = truth
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let sensor = p.pose.compose(&scenario.mount);
            simulate_scan(&segments, &sensor, &scenario.scan, p.t, scenario.seed, i as u64)
        })
        .collect();
    let mut frames = Vec::with_capacity(2 * truth.len());
    for (o, s) in odom.into_iter().zip(scans) {
        frames.push(Frame::Odom(o));
        frames.push(Frame::Scan(s));
    }
    let checkpoints = place_checkpoints(&truth, scenario.checkpoints);
    let references = generate_reference_pairs(world, scenario.reference_pairs, scenario.seed)?;
    let log = SensorLog {
        mount: scenario.mount,
        max_range: scenario.scan.max_range,
        frames,
        checkpoints: checkpoints.clone(),
    };
    Ok((
        log,
        GroundTruthLog {
            poses: truth,
            checkpoints,
            references,
        },
    ))
}
