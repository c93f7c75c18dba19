//! Nearest-neighbour map distances (ADNN, Hausdorff) via distance fields.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::gridmap::{distance_transform, DistanceField, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdnnDirection {
    /// Mean over candidate structure of the distance to the reference;
    /// penalizes content the reference does not have.
    #[default]
    CandidateToReference,
    /// Mean of both one-directional values.
    Symmetric,
}

fn check_resolution(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<(), EvalError> {
    if (a.resolution() - b.resolution()).abs() > 1e-12 * a.resolution() {
        return Err(EvalError::InvalidInput(format!(
            "resolutions differ: {} vs {}",
            a.resolution(),
            b.resolution()
        )));
    }
    Ok(())
}

/// Distances from every Occupied cell center of `from` to the nearest
/// Occupied cell of the grid behind `field`.
fn sampled_distances(from: &OccupancyGrid, field: &DistanceField) -> Result<Vec<f64>, EvalError> {
    let pts = from.occupied_points();
    if pts.is_empty() {
        return Err(EvalError::EmptySet("candidate has no occupied cells"));
    }
    pts.iter()
        .map(|p| {
            field.at_world(*p).ok_or_else(|| {
                EvalError::InvalidInput(format!(
                    "occupied cell at ({:.3}, {:.3}) lies outside the other raster",
                    p.x, p.y
                ))
            })
        })
        .collect()
}

fn field_of(grid: &OccupancyGrid, what: &'static str) -> Result<DistanceField, EvalError> {
    let f = distance_transform(grid);
    if !f.has_sites() {
        return Err(EvalError::EmptySet(what));
    }
    Ok(f)
}

/// Average distance to nearest neighbour between occupied cell centers.
pub fn adnn(candidate: &OccupancyGrid, reference: &OccupancyGrid, direction: AdnnDirection) -> Result<f64, EvalError> {
    check_resolution(candidate, reference)?;
    let ref_field = field_of(reference, "reference has no occupied cells")?;
    let forward = sampled_distances(candidate, &ref_field)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    match direction {
        AdnnDirection::CandidateToReference => Ok(mean(&forward)),
        AdnnDirection::Symmetric => {
            let cand_field = field_of(candidate, "candidate has no occupied cells")?;
            let backward = sampled_distances(reference, &cand_field)?;
            Ok(0.5 * (mean(&forward) + mean(&backward)))
        }
    }
}

/// Symmetric Hausdorff distance between the occupied cell-center sets.
pub fn hausdorff(candidate: &OccupancyGrid, reference: &OccupancyGrid) -> Result<f64, EvalError> {
    check_resolution(candidate, reference)?;
    let ref_field = field_of(reference, "reference has no occupied cells")?;
    let cand_field = field_of(candidate, "candidate has no occupied cells")?;
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    Ok(max(sampled_distances(candidate, &ref_field)?).max(max(sampled_distances(reference, &cand_field)?)))
}
