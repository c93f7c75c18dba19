//! Evaluation toolkit for 2D robot maps.

// NaN must fail range checks, so `!(x > 0.0)` is intended throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchreport;
pub mod error;
pub mod geometry;
pub mod gridmap;
pub mod mapmetrics;
pub mod mcl;
pub mod rng;
pub mod simharness;
pub mod stats;

pub use error::{EvalError, MapError};
pub use geometry::{Point2, Pose2D, Transform2D};
pub use gridmap::{CellIndex, CellState, DistanceField, OccupancyGrid};
pub use stats::DeviationStats;
