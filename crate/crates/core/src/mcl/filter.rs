//! Particle filter primitives: likelihood field, motion and sensor
//! updates, KLD resampling and pose extraction.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::log::ScanFrame;
use super::MclConfig;
use crate::error::EvalError;
use crate::geometry::{angle_diff, normalize_angle, Point2, Pose2D};
use crate::gridmap::{distance_transform, OccupancyGrid};
use crate::rng::{stream, tag};

/// Per-cell beam likelihood `exp(−d²/2σ²)` with `d` clamped at the
/// saturation distance. Lookups outside the raster return the floor.
#[derive(Debug, Clone)]
pub struct LikelihoodField {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2D,
    values: Vec<f64>,
    floor: f64,
}

impl LikelihoodField {
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, p: Point2) -> f64 {
        let g = (p - self.origin.position()).rotate(-self.origin.theta) * (1.0 / self.resolution);
        let (fx, fy) = (g.x.floor(), g.y.floor());
        if fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64 {
            self.values[fy as usize * self.width + fx as usize]
        } else {
            self.floor
        }
    }
}

pub fn likelihood_field(
    grid: &OccupancyGrid,
    sigma_hit: f64,
    saturation_distance: f64,
) -> Result<LikelihoodField, EvalError> {
    if !(sigma_hit > 0.0) || !(saturation_distance >= 0.0) {
        return Err(EvalError::InvalidInput(
            "sigma_hit must be > 0 and saturation >= 0".into(),
        ));
    }
    let df = distance_transform(grid);
    if !df.has_sites() {
        return Err(EvalError::EmptySet("map has no occupied cells"));
    }
    let f = |d: f64| (-(d * d) / (2.0 * sigma_hit * sigma_hit)).exp();
    let values = (0..grid.len())
        .map(|i| f(df.meters_at(i).min(saturation_distance)))
        .collect();
    Ok(LikelihoodField {
        width: grid.width(),
        height: grid.height(),
        resolution: grid.resolution(),
        origin: grid.origin(),
        values,
        floor: f(saturation_distance),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub pose: Pose2D,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    pub normalized: bool,
}

impl ParticleSet {
    /// Uniformly weighted set.
    pub fn uniform(poses: Vec<Pose2D>) -> Self {
        let w = 1.0 / poses.len() as f64;
        Self {
            particles: poses.into_iter().map(|pose| Particle { pose, weight: w }).collect(),
            normalized: true,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn reset_weights(&mut self) {
        let w = 1.0 / self.len() as f64;
        self.particles.iter_mut().for_each(|p| p.weight = w);
        self.normalized = true;
    }

    pub fn normalize(&mut self) -> Result<(), EvalError> {
        let s = self.weight_sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(EvalError::MeasurementIncompatible);
        }
        self.particles.iter_mut().for_each(|p| p.weight /= s);
        self.normalized = true;
        Ok(())
    }
}

fn normal(rng: &mut impl Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        std * rng.sample::<f64, _>(StandardNormal)
    }
}

/// `n` particles drawn independently around `pose`; particle `i` uses the
/// stream `(seed, INIT, i)`.
pub fn init_particles(pose: Pose2D, std: [f64; 3], n: usize, config: &MclConfig) -> Result<ParticleSet, EvalError> {
    if n < config.n_min || n > config.n_max || n == 0 {
        return Err(EvalError::InvalidInput(format!(
            "particle count {n} outside [{}, {}]",
            config.n_min, config.n_max
        )));
    }
    if std.iter().any(|s| !(*s >= 0.0)) {
        return Err(EvalError::InvalidInput("init std must be non-negative".into()));
    }
    let poses = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, &[tag::INIT, i as u64]);
            let dx = normal(&mut rng, std[0]);
            let dy = normal(&mut rng, std[1]);
            let dt = normal(&mut rng, std[2]);
            Pose2D::new(pose.x + dx, pose.y + dy, pose.theta + dt)
        })
        .collect();
    Ok(ParticleSet::uniform(poses))
}

/// Odometry delta split into initial rotation, translation, final rotation.
pub fn decompose_motion(prev: &Pose2D, now: &Pose2D) -> (f64, f64, f64) {
    let (dx, dy) = (now.x - prev.x, now.y - prev.y);
    let trans = dx.hypot(dy);
    let rot1 = if trans < 0.01 {
        0.0
    } else {
        angle_diff(dy.atan2(dx), prev.theta)
    };
    let rot2 = angle_diff(angle_diff(now.theta, prev.theta), rot1);
    (rot1, trans, rot2)
}

/// Noise standard deviations `(rot1, trans, rot2)` of the odometry model.
pub fn motion_noise_std(rot1: f64, trans: f64, rot2: f64, a: [f64; 4]) -> (f64, f64, f64) {
    (
        a[0] * rot1.abs() + a[1] * trans,
        a[2] * trans + a[3] * (rot1.abs() + rot2.abs()),
        a[0] * rot2.abs() + a[1] * trans,
    )
}

/// Samples the odometry motion model for every particle. Particle `i` at
/// frame `frame` draws from the stream `(seed, MOTION, frame, i)`.
pub fn motion_update(
    particles: &mut ParticleSet,
    odom_prev: &Pose2D,
    odom_now: &Pose2D,
    alphas: [f64; 4],
    seed: u64,
    frame: u64,
) {
    let (rot1, trans, rot2) = decompose_motion(odom_prev, odom_now);
    let (s1, st, s2) = motion_noise_std(rot1, trans, rot2, alphas);
    let exact = s1 == 0.0 && st == 0.0 && s2 == 0.0;
    if exact && trans == 0.0 && rot1 == 0.0 && rot2 == 0.0 {
        return;
    }
    particles.particles.par_iter_mut().enumerate().for_each(|(i, p)| {
        let (r1, t, r2) = if exact {
            (rot1, trans, rot2)
        } else {
            let mut rng = stream(seed, &[tag::MOTION, frame, i as u64]);
            (
                rot1 - normal(&mut rng, s1),
                trans - normal(&mut rng, st),
                rot2 - normal(&mut rng, s2),
            )
        };
        let h = p.pose.theta + r1;
        p.pose = Pose2D::new(p.pose.x + t * h.cos(), p.pose.y + t * h.sin(), h + r2);
    });
}

/// Beams used by the sensor model: evenly spaced indices, returns at or
/// beyond `max_range` dropped. Items are `(range·cos b, range·sin b)`.
pub fn select_beams(scan: &ScanFrame, beam_subsample: usize, max_range: f64) -> Vec<Point2> {
    let n = scan.ranges.len();
    let k = beam_subsample.max(1).min(n);
    (0..k)
        .map(|j| j * n / k)
        .filter(|&i| scan.ranges[i] < max_range)
        .map(|i| {
            Point2::new(
                scan.ranges[i] * scan.bearings[i].cos(),
                scan.ranges[i] * scan.bearings[i].sin(),
            )
        })
        .collect()
}

/// Log of the un-normalized measurement likelihood of one pose.
pub fn scan_log_likelihood(
    pose: &Pose2D,
    beams: &[Point2],
    field: &LikelihoodField,
    mount: &Pose2D,
    max_range: f64,
    config: &MclConfig,
) -> f64 {
    let sensor = pose.compose(mount);
    let z_rand = config.z_rand / max_range;
    beams
        .iter()
        .map(|b| (config.z_hit * field.at(sensor.transform_point(*b)) + z_rand).ln())
        .sum()
}

/// Multiplies each weight by its scan likelihood and renormalizes. On
/// `MeasurementIncompatible` the particles are left untouched.
pub fn sensor_update(
    particles: &mut ParticleSet,
    scan: &ScanFrame,
    field: &LikelihoodField,
    mount: &Pose2D,
    max_range: f64,
    config: &MclConfig,
) -> Result<(), EvalError> {
    if particles.is_empty() {
        return Err(EvalError::EmptySet("particle set is empty"));
    }
    let beams = select_beams(scan, config.beam_subsample, max_range);
    if beams.is_empty() {
        return Ok(());
    }
    let logw: Vec<f64> = particles
        .particles
        .par_iter()
        .map(|p| p.weight.ln() + scan_log_likelihood(&p.pose, &beams, field, mount, max_range, config))
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // the linear-space product would underflow for every particle
    if !(max >= f64::MIN_POSITIVE.ln()) {
        return Err(EvalError::MeasurementIncompatible);
    }
    for (p, lw) in particles.particles.iter_mut().zip(&logw) {
        p.weight = (lw - max).exp();
    }
    particles.normalize()
}

pub fn effective_sample_size(particles: &ParticleSet) -> Result<f64, EvalError> {
    if !particles.normalized || particles.is_empty() {
        return Err(EvalError::InvalidInput(
            "effective sample size needs normalized weights".into(),
        ));
    }
    Ok(1.0 / particles.particles.iter().map(|p| p.weight * p.weight).sum::<f64>())
}

/// KLD-sampling bound on the sample count for `k` occupied bins.
pub fn kld_bound(k: usize, epsilon: f64, delta: f64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let z = Normal::standard().inverse_cdf(1.0 - delta);
    let km = (k - 1) as f64;
    let a = 2.0 / (9.0 * km);
    km / (2.0 * epsilon) * (1.0 - a + a.sqrt() * z).powi(3)
}

/// Low-variance draw of `m` indices with offset `u0 ∈ [0, 1)`.
fn systematic(particles: &ParticleSet, m: usize, u0: f64) -> Vec<usize> {
    let total = particles.weight_sum();
    let step = total / m as f64;
    let mut out = Vec::with_capacity(m);
    let mut i = 0;
    let mut c = particles.particles[0].weight;
    let last = particles.len() - 1;
    for j in 0..m {
        let u = (u0 + j as f64) * step;
        while u >= c && i < last {
            i += 1;
            c += particles.particles[i].weight;
        }
        out.push(i);
    }
    out
}

pub fn pose_bin(p: &Pose2D, bin: [f64; 3]) -> (i64, i64, i64) {
    (
        (p.x / bin[0]).floor() as i64,
        (p.y / bin[1]).floor() as i64,
        (p.theta / bin[2]).floor() as i64,
    )
}

/// Occupied histogram bins of a `n_max`-sized systematic draw choose the
/// new size via the KLD bound, then a second draw of that size is kept.
/// Both draws share one offset from the stream `(seed, RESAMPLE, frame)`.
pub fn resample_kld(particles: &ParticleSet, config: &MclConfig, frame: u64) -> Result<ParticleSet, EvalError> {
    if particles.is_empty() {
        return Err(EvalError::EmptySet("particle set is empty"));
    }
    let total = particles.weight_sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(EvalError::InvalidInput("cannot resample all-zero weights".into()));
    }
    let u0: f64 = stream(config.seed, &[tag::RESAMPLE, frame]).random();
    let bins: HashSet<_> = systematic(particles, config.n_max, u0)
        .into_iter()
        .map(|i| pose_bin(&particles.particles[i].pose, config.bin_size))
        .collect();
    let m =
        (kld_bound(bins.len(), config.kld_epsilon, config.kld_delta).ceil() as usize).clamp(config.n_min, config.n_max);
    let poses = systematic(particles, m, u0)
        .into_iter()
        .map(|i| particles.particles[i].pose)
        .collect();
    Ok(ParticleSet::uniform(poses))
}

/// Spread of the particle cloud; `theta` is the circular variance `1 − R̄`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseCovariance {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub theta: f64,
}

pub fn estimate_pose(particles: &ParticleSet) -> Result<(Pose2D, PoseCovariance), EvalError> {
    if particles.is_empty() {
        return Err(EvalError::EmptySet("particle set is empty"));
    }
    let total = particles.weight_sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(EvalError::InvalidInput("weights sum to zero".into()));
    }
    let (mut mx, mut my, mut ms, mut mc) = (0.0, 0.0, 0.0, 0.0);
    for p in &particles.particles {
        let w = p.weight / total;
        mx += w * p.pose.x;
        my += w * p.pose.y;
        ms += w * p.pose.theta.sin();
        mc += w * p.pose.theta.cos();
    }
    let mut cov = PoseCovariance::default();
    for p in &particles.particles {
        let w = p.weight / total;
        let (dx, dy) = (p.pose.x - mx, p.pose.y - my);
        cov.xx += w * dx * dx;
        cov.xy += w * dx * dy;
        cov.yy += w * dy * dy;
    }
    cov.theta = (1.0 - ms.hypot(mc)).max(0.0);
    Ok((Pose2D::new(mx, my, normalize_angle(ms.atan2(mc))), cov))
}
