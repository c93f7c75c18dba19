//! Point-to-point ICP with the closed-form planar rigid solution.

use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use crate::error::EvalError;
use crate::geometry::{Point2, Transform2D};
use crate::gridmap::OccupancyGrid;
use crate::stats::DeviationStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcpInit {
    #[default]
    Identity,
    /// Start from the translation joining the two centroids.
    Centroids,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop once the mean residual changes by less than this (meters).
    pub convergence_tol: f64,
    /// Pairs farther apart than this are not used (meters).
    pub correspondence_cutoff: f64,
    pub init: IcpInit,
    /// Grid inputs are thinned to at most this many points by a fixed
    /// row-major stride.
    pub max_points: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_tol: 1e-6,
            correspondence_cutoff: 1.0,
            init: IcpInit::Identity,
            max_points: 40_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Maps candidate points into the reference frame.
    pub transform: Transform2D,
    /// Final correspondence distances; `rmse` is the alignment RMSE.
    pub residuals: DeviationStats,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`.
pub fn rigid_fit(src: &[Point2], dst: &[Point2]) -> Transform2D {
    let n = src.len() as f64;
    let mean = |v: &[Point2]| v.iter().fold(Point2::default(), |a, p| a + *p) * (1.0 / n);
    let (cs, cd) = (mean(src), mean(dst));
    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (*s - cs, *d - cd);
        sin_sum += a.x * b.y - a.y * b.x;
        cos_sum += a.x * b.x + a.y * b.y;
    }
    let theta = sin_sum.atan2(cos_sum);
    let t = cd - cs.rotate(theta);
    Transform2D::new(theta, t.x, t.y)
}

fn correspond(
    tree: &KdTree,
    reference: &[Point2],
    candidate: &[Point2],
    transform: &Transform2D,
    cutoff_sq: f64,
) -> (Vec<Point2>, Vec<Point2>, Vec<f64>) {
    let mut src = Vec::with_capacity(candidate.len());
    let mut dst = Vec::with_capacity(candidate.len());
    let mut dist = Vec::with_capacity(candidate.len());
    for p in candidate {
        let q = transform.apply(*p);
        if let Some((j, d2)) = tree.nearest(q) {
            if d2 <= cutoff_sq {
                src.push(q);
                dst.push(reference[j]);
                dist.push(d2.sqrt());
            }
        }
    }
    (src, dst, dist)
}

pub fn icp_align_points(
    candidate: &[Point2],
    reference: &[Point2],
    config: &IcpConfig,
) -> Result<IcpResult, EvalError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(EvalError::EmptySet("icp needs points on both sides"));
    }
    let tree = KdTree::new(reference);
    let cutoff_sq = config.correspondence_cutoff * config.correspondence_cutoff;
    let mut transform = match config.init {
        IcpInit::Identity => Transform2D::identity(),
        IcpInit::Centroids => {
            let c = |v: &[Point2]| v.iter().fold(Point2::default(), |a, p| a + *p) * (1.0 / v.len() as f64);
            let t = c(reference) - c(candidate);
            Transform2D::new(0.0, t.x, t.y)
        }
    };
    let mut prev_mean = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        let (src, dst, dist) = correspond(&tree, reference, candidate, &transform, cutoff_sq);
        if src.is_empty() {
            return Err(EvalError::NoCorrespondences {
                cutoff: config.correspondence_cutoff,
            });
        }
        let mean = dist.iter().sum::<f64>() / dist.len() as f64;
        if (prev_mean - mean).abs() < config.convergence_tol {
            converged = true;
            break;
        }
        prev_mean = mean;
        transform = rigid_fit(&src, &dst).compose(&transform);
        iterations += 1;
    }
    let (_, _, dist) = correspond(&tree, reference, candidate, &transform, cutoff_sq);
    if dist.is_empty() {
        return Err(EvalError::NoCorrespondences {
            cutoff: config.correspondence_cutoff,
        });
    }
    Ok(IcpResult {
        transform,
        residuals: DeviationStats::from_deviations(dist)?,
        iterations,
        converged,
    })
}

fn thin(points: Vec<Point2>, max_points: usize) -> Vec<Point2> {
    if max_points == 0 || points.len() <= max_points {
        return points;
    }
    let stride = points.len().div_ceil(max_points);
    points.into_iter().step_by(stride).collect()
}

/// ICP between the occupied cell centers of two grids.
pub fn icp_align(
    candidate: &OccupancyGrid,
    reference: &OccupancyGrid,
    config: &IcpConfig,
) -> Result<IcpResult, EvalError> {
    let c = thin(candidate.occupied_points(), config.max_points);
    let r = thin(reference.occupied_points(), config.max_points);
    icp_align_points(&c, &r, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
        (0..n)
            .map(|_| Point2::new(rng.random_range(0.0..6.0), rng.random_range(0.0..3.0)))
            .collect()
    }

    #[test]
    fn identical_clouds_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = cloud(&mut rng, 80);
        let r = icp_align_points(&pts, &pts, &IcpConfig::default()).unwrap();
        assert!(r.transform.theta.abs() < 1e-12);
        assert!(r.transform.translation().norm() < 1e-12);
        assert_eq!(r.residuals.max, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn recovers_rotation_about_centroid_plus_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let candidate = cloud(&mut rng, 120);
        let n = candidate.len() as f64;
        let centroid = candidate.iter().fold(Point2::default(), |a, p| a + *p) * (1.0 / n);
        let theta = 10f64.to_radians();
        let reference: Vec<Point2> = candidate
            .iter()
            .map(|p| (*p - centroid).rotate(theta) + centroid + Point2::new(0.3, -0.2))
            .collect();
        let r = icp_align_points(&candidate, &reference, &IcpConfig::default()).unwrap();
        // expected: rotation by theta about the centroid, then the shift
        let t = centroid - centroid.rotate(theta) + Point2::new(0.3, -0.2);
        assert!(angle_diff(r.transform.theta, theta).abs() < 1e-3);
        assert!(r.transform.translation().dist(t) < 1e-3);
        assert!(r.residuals.max < 1e-6);
    }

    #[test]
    fn single_points_join_by_translation() {
        let r = icp_align_points(
            &[Point2::new(1.0, 1.0)],
            &[Point2::new(1.4, 0.7)],
            &IcpConfig::default(),
        )
        .unwrap();
        assert!(r.transform.theta.abs() < 1e-12);
        assert!(r.transform.translation().dist(Point2::new(0.4, -0.3)) < 1e-12);
        assert!(r.residuals.max < 1e-12);
    }

    #[test]
    fn error_paths() {
        let cfg = IcpConfig::default();
        assert!(icp_align_points(&[], &[Point2::default()], &cfg).is_err());
        let far = icp_align_points(&[Point2::new(0.0, 0.0)], &[Point2::new(10.0, 0.0)], &cfg);
        assert!(matches!(far, Err(EvalError::NoCorrespondences { .. })));
    }
}
