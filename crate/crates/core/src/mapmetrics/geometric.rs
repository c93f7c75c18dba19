//! Geometric verification: map-measured lengths against surveyed ones.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::Point2;
use crate::gridmap::OccupancyGrid;
use crate::stats::DeviationStats;

/// A surveyed distance between two features, in world meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeasurement {
    pub id: String,
    pub endpoint_a: Point2,
    pub endpoint_b: Point2,
    pub true_length: f64,
}

impl ReferenceMeasurement {
    pub fn new(id: impl Into<String>, a: Point2, b: Point2, true_length: f64) -> Result<Self, EvalError> {
        let id = id.into();
        if !(true_length > 0.0) || !true_length.is_finite() {
            return Err(EvalError::InvalidInput(format!(
                "reference {id}: true_length must be > 0, got {true_length}"
            )));
        }
        if a == b {
            return Err(EvalError::InvalidInput(format!("reference {id}: endpoints coincide")));
        }
        Ok(Self {
            id,
            endpoint_a: a,
            endpoint_b: b,
            true_length,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ReferenceRow {
    id: String,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    true_length: f64,
}

/// Reads `id,ax,ay,bx,by,true_length` rows.
pub fn read_references<R: Read>(reader: R) -> Result<Vec<ReferenceMeasurement>, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| EvalError::InvalidInput(format!("reference csv: {e}")))?
        .clone();
    let expected = ["id", "ax", "ay", "bx", "by", "true_length"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(EvalError::InvalidInput(format!(
            "reference csv header must be {}",
            expected.join(",")
        )));
    }
    rdr.deserialize::<ReferenceRow>()
        .map(|row| {
            let r = row.map_err(|e| EvalError::InvalidInput(format!("reference csv: {e}")))?;
            ReferenceMeasurement::new(r.id, Point2::new(r.ax, r.ay), Point2::new(r.bx, r.by), r.true_length)
        })
        .collect()
}

pub fn write_references<W: Write>(writer: W, refs: &[ReferenceMeasurement]) -> Result<(), EvalError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for r in refs {
        wtr.serialize(ReferenceRow {
            id: r.id.clone(),
            ax: r.endpoint_a.x,
            ay: r.endpoint_a.y,
            bx: r.endpoint_b.x,
            by: r.endpoint_b.y,
            true_length: r.true_length,
        })
        .map_err(|e| EvalError::InvalidInput(format!("reference csv: {e}")))?;
    }
    wtr.flush()
        .map_err(|e| EvalError::InvalidInput(format!("reference csv: {e}")))
}

/// How a reference endpoint is located in the candidate map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeaturePick {
    /// Use the surveyed world coordinate directly.
    Exact,
    /// Snap to the nearest point of Occupied area within `radius` meters, i.e. the
    /// feature as drawn in the map. Endpoints with nothing in range are
    /// skipped.
    NearestOccupied { radius: f64 },
}

impl Default for FeaturePick {
    fn default() -> Self {
        FeaturePick::NearestOccupied { radius: 1.5 }
    }
}

/// Per reference: `|measured − true_length|`, where the measured length is
/// the cell-center distance between the picked endpoints.
pub fn geometric_verification(
    grid: &OccupancyGrid,
    refs: &[ReferenceMeasurement],
    pick: FeaturePick,
) -> Result<DeviationStats, EvalError> {
    if refs.is_empty() {
        return Err(EvalError::InvalidInput("no reference measurements".into()));
    }
    let locate = |p: Point2| match pick {
        FeaturePick::Exact => Some(p),
        FeaturePick::NearestOccupied { radius } => grid.nearest_occupied(p, radius),
    };
    let mut deviations = Vec::with_capacity(refs.len());
    let mut skipped = 0;
    for r in refs {
        let measured = locate(r.endpoint_a)
            .zip(locate(r.endpoint_b))
            .and_then(|(a, b)| grid.measure_distance(a, b).ok());
        match measured {
            Some(m) => deviations.push((m - r.true_length).abs()),
            None => skipped += 1,
        }
    }
    DeviationStats::with_skipped(deviations, skipped)
}
