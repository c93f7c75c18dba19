//! Adaptive Monte Carlo localization replay and trajectory scoring.

mod filter;
mod log;
mod replay;
mod trajectory;

pub use filter::{
    decompose_motion, effective_sample_size, estimate_pose, init_particles, kld_bound, likelihood_field,
    motion_noise_std, motion_update, pose_bin, resample_kld, scan_log_likelihood, select_beams, sensor_update,
    LikelihoodField, Particle, ParticleSet, PoseCovariance,
};
pub use log::{Checkpoint, Frame, OdomFrame, ScanFrame, SensorLog, LOG_FORMAT_VERSION};
pub use replay::{run_replay, run_replay_with_field, ReplayAnnotation, TrajectoryEntry, TrajectoryEstimate};
pub use trajectory::{ape, checkpoint_deviation, detect_divergence, interpolate_pose, rpe, TimedPose};

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MclConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Odometry noise weights: rot←rot, rot←trans, trans←trans, trans←rot.
    pub alphas: [f64; 4],
    pub z_hit: f64,
    pub z_rand: f64,
    pub sigma_hit: f64,
    pub saturation_distance: f64,
    pub beam_subsample: usize,
    /// Resample when ESS / n falls below this.
    pub resample_threshold: f64,
    pub kld_epsilon: f64,
    pub kld_delta: f64,
    /// Histogram bin sizes (m, m, rad).
    pub bin_size: [f64; 3],
    /// Initial spread around the start pose (m, m, rad).
    pub init_std: [f64; 3],
    pub seed: u64,
}

impl Default for MclConfig {
    fn default() -> Self {
        Self {
            n_min: 500,
            n_max: 5000,
            alphas: [0.2; 4],
            z_hit: 0.95,
            z_rand: 0.05,
            sigma_hit: 0.2,
            saturation_distance: 2.0,
            beam_subsample: 60,
            resample_threshold: 0.5,
            kld_epsilon: 0.01,
            kld_delta: 0.01,
            bin_size: [0.5, 0.5, 10f64.to_radians()],
            init_std: [0.1, 0.1, 0.05],
            seed: 0,
        }
    }
}

impl MclConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidInput(m.into()));
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad("need 0 < n_min <= n_max");
        }
        if !(0.0..=1.0).contains(&self.z_hit)
            || !(0.0..=1.0).contains(&self.z_rand)
            || self.z_hit + self.z_rand > 1.0 + 1e-12
        {
            return bad("z_hit and z_rand must lie in [0, 1] and sum to at most 1");
        }
        if !(self.sigma_hit > 0.0) {
            return bad("sigma_hit must be positive");
        }
        if self.beam_subsample == 0 {
            return bad("beam_subsample must be at least 1");
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return bad("resample_threshold must lie in (0, 1]");
        }
        if !(self.kld_epsilon > 0.0) || !(self.kld_delta > 0.0 && self.kld_delta < 1.0) {
            return bad("kld_epsilon must be positive and kld_delta in (0, 1)");
        }
        if self.bin_size.iter().any(|b| !(*b > 0.0)) {
            return bad("bin sizes must be positive");
        }
        if self.alphas.iter().chain(&self.init_std).any(|a| !(*a >= 0.0)) {
            return bad("alphas and init_std must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
