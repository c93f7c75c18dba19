//! Trajectory comparison: checkpoint deviation, APE, RPE and divergence.

use serde::{Deserialize, Serialize};

use super::log::Checkpoint;
use super::replay::TrajectoryEstimate;
use crate::error::EvalError;
use crate::geometry::Pose2D;
use crate::stats::DeviationStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    pub pose: Pose2D,
}

/// Pose at `t` on a time-ordered trajectory, or `None` outside its span.
pub fn interpolate_pose(traj: &[TimedPose], t: f64) -> Option<Pose2D> {
    let (first, last) = (traj.first()?, traj.last()?);
    if t < first.t || t > last.t {
        return None;
    }
    let k = traj.partition_point(|p| p.t <= t);
    if k == traj.len() {
        return Some(last.pose);
    }
    let (a, b) = (&traj[k - 1], &traj[k]);
    if a.t == t {
        return Some(a.pose);
    }
    Some(a.pose.interpolate(&b.pose, (t - a.t) / (b.t - a.t)))
}

fn span(traj: &[TimedPose]) -> Option<(f64, f64)> {
    Some((traj.first()?.t, traj.last()?.t))
}

pub fn checkpoint_deviation(
    traj: &TrajectoryEstimate,
    checkpoints: &[Checkpoint],
) -> Result<DeviationStats, EvalError> {
    if checkpoints.is_empty() {
        return Err(EvalError::EmptySet("no checkpoints"));
    }
    let poses = traj.timed_poses();
    let (start, end) = span(&poses).ok_or(EvalError::EmptySet("trajectory is empty"))?;
    let mut d = Vec::with_capacity(checkpoints.len());
    for c in checkpoints {
        let est = interpolate_pose(&poses, c.timestamp).ok_or(EvalError::OutsideSpan {
            t: c.timestamp,
            start,
            end,
        })?;
        d.push(est.position().dist(c.ground_truth_pose.position()));
    }
    DeviationStats::from_deviations(d)
}

fn no_overlap() -> EvalError {
    EvalError::InvalidInput("trajectories do not overlap in time".into())
}

/// Positional error at every ground-truth timestamp inside the estimate's span.
fn aligned_errors(traj: &[TimedPose], ground_truth: &[TimedPose]) -> Vec<(f64, f64)> {
    ground_truth
        .iter()
        .filter_map(|g| interpolate_pose(traj, g.t).map(|e| (g.t, e.position().dist(g.pose.position()))))
        .collect()
}

/// Absolute pose error (position) per matched timestamp.
pub fn ape(traj: &[TimedPose], ground_truth: &[TimedPose]) -> Result<DeviationStats, EvalError> {
    let e = aligned_errors(traj, ground_truth);
    if e.is_empty() {
        return Err(no_overlap());
    }
    DeviationStats::from_deviations(e.into_iter().map(|(_, d)| d).collect())
}

/// Relative pose error: translation norm of `(gt_i⁻¹ gt_j)⁻¹ (est_i⁻¹ est_j)`
/// over windows `[t_i, t_i + delta]` anchored at ground-truth timestamps.
pub fn rpe(traj: &[TimedPose], ground_truth: &[TimedPose], delta: f64) -> Result<DeviationStats, EvalError> {
    if !(delta > 0.0) {
        return Err(EvalError::InvalidInput("rpe window must be positive".into()));
    }
    let mut d = Vec::new();
    for g in ground_truth {
        let t2 = g.t + delta;
        let (Some(g2), Some(e1), Some(e2)) = (
            interpolate_pose(ground_truth, t2),
            interpolate_pose(traj, g.t),
            interpolate_pose(traj, t2),
        ) else {
            continue;
        };
        let err = g.pose.between(&g2).inverse().compose(&e1.between(&e2));
        d.push(err.position().norm());
    }
    if d.is_empty() {
        return Err(no_overlap());
    }
    DeviationStats::from_deviations(d)
}

/// Earliest time from which the positional error stays above `threshold`
/// for at least `hold` seconds.
pub fn detect_divergence(
    traj: &[TimedPose],
    ground_truth: &[TimedPose],
    threshold: f64,
    hold: f64,
) -> Result<Option<f64>, EvalError> {
    let e = aligned_errors(traj, ground_truth);
    if e.is_empty() {
        return Err(no_overlap());
    }
    let mut run: Option<f64> = None;
    for (t, d) in e {
        if d > threshold {
            let start = *run.get_or_insert(t);
            if t - start >= hold {
                return Ok(Some(start));
            }
        } else {
            run = None;
        }
    }
    Ok(None)
}
