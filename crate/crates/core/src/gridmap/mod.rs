//! Tri-state occupancy grids with metric georegistration.
//!
//! Cell `(x, y)` covers the square `[x, x+1) × [y, y+1)` (in cells) of the
//! grid frame, whose corner sits at `origin` in the world frame. Row 0 is
//! the bottom row (lowest world `y` when the origin yaw is zero); image
//! files store the top row first and are flipped on load/save.

mod distance;
mod io;
mod raycast;

pub use distance::{distance_transform, DistanceField};
pub use io::{load_map, load_map_yaml, save_map, MapMetadata};
pub use raycast::raycast;
pub(crate) use raycast::traverse;

use serde::{Deserialize, Serialize};

use crate::error::MapError;
use crate::geometry::{Point2, Pose2D};

/// Default grid resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Occupied,
    Free,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2D,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        cells: Vec<CellState>,
    ) -> Result<Self, MapError> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if cells.len() != width * height {
            return Err(MapError::InvalidGrid(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// Grid with every cell set to `fill`.
    pub fn filled(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        fill: CellState,
    ) -> Result<Self, MapError> {
        Self::new(width, height, resolution, origin, vec![fill; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2D {
        self.origin
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn index(&self, c: CellIndex) -> usize {
        c.y * self.width + c.x
    }

    #[inline]
    pub fn cell_of_index(&self, i: usize) -> CellIndex {
        CellIndex::new(i % self.width, i / self.width)
    }

    #[inline]
    pub fn get(&self, c: CellIndex) -> CellState {
        self.cells[self.index(c)]
    }

    pub fn get_checked(&self, x: i64, y: i64) -> Option<CellState> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.cells[y as usize * self.width + x as usize])
        }
    }

    pub fn set(&mut self, c: CellIndex, state: CellState) {
        let i = self.index(c);
        self.cells[i] = state;
    }

    pub fn is_occupied(&self, c: CellIndex) -> bool {
        self.get(c) == CellState::Occupied
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|s| **s == state).count()
    }

    /// Same shape and georegistration, every cell `fill`.
    pub fn blank_like(&self, fill: CellState) -> Self {
        Self {
            cells: vec![fill; self.cells.len()],
            ..self.clone()
        }
    }

    /// World point expressed in continuous cell units of the grid frame.
    pub fn world_to_grid(&self, p: Point2) -> Point2 {
        (p - self.origin.position()).rotate(-self.origin.theta) * (1.0 / self.resolution)
    }

    pub fn grid_to_world(&self, g: Point2) -> Point2 {
        (g * self.resolution).rotate(self.origin.theta) + self.origin.position()
    }

    /// Cell containing `p`, or `None` when `p` lies outside the grid.
    pub fn world_to_cell(&self, p: Point2) -> Option<CellIndex> {
        let g = self.world_to_grid(p);
        let (fx, fy) = (g.x.floor(), g.y.floor());
        if !fx.is_finite() || !fy.is_finite() || fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (x, y) = (fx as usize, fy as usize);
        (x < self.width && y < self.height).then_some(CellIndex::new(x, y))
    }

    /// World coordinates of the cell center.
    pub fn cell_to_world(&self, c: CellIndex) -> Point2 {
        self.grid_to_world(Point2::new(c.x as f64 + 0.5, c.y as f64 + 0.5))
    }

    /// Distance between the centers of the cells containing `a` and `b`,
    /// i.e. pixel distance times resolution.
    pub fn measure_distance(&self, a: Point2, b: Point2) -> Result<f64, MapError> {
        let ca = self.world_to_cell(a).ok_or(MapError::OutOfBounds { x: a.x, y: a.y })?;
        let cb = self.world_to_cell(b).ok_or(MapError::OutOfBounds { x: b.x, y: b.y })?;
        let dx = ca.x as f64 - cb.x as f64;
        let dy = ca.y as f64 - cb.y as f64;
        Ok(dx.hypot(dy) * self.resolution)
    }

    /// Centers of all Occupied cells in row-major order.
    pub fn occupied_points(&self) -> Vec<Point2> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == CellState::Occupied)
            .map(|(i, _)| self.cell_to_world(self.cell_of_index(i)))
            .collect()
    }

    /// Closest point to `p` on the area covered by Occupied cells, within
    /// `radius` meters. A point inside an Occupied cell is returned as is.
    /// Ties resolve to the lowest row-major index.
    pub fn nearest_occupied(&self, p: Point2, radius: f64) -> Option<Point2> {
        let g = self.world_to_grid(p);
        let r_cells = (radius / self.resolution).ceil() as i64 + 1;
        let (cx, cy) = (g.x.floor() as i64, g.y.floor() as i64);
        let mut best: Option<(f64, usize, Point2)> = None;
        for y in (cy - r_cells).max(0)..=(cy + r_cells).min(self.height as i64 - 1) {
            for x in (cx - r_cells).max(0)..=(cx + r_cells).min(self.width as i64 - 1) {
                let i = y as usize * self.width + x as usize;
                if self.cells[i] != CellState::Occupied {
                    continue;
                }
                let q = Point2::new(g.x.clamp(x as f64, x as f64 + 1.0), g.y.clamp(y as f64, y as f64 + 1.0));
                let d = q.dist(g) * self.resolution;
                if d <= radius && best.is_none_or(|(bd, bi, _)| d < bd || (d == bd && i < bi)) {
                    best = Some((d, i, q));
                }
            }
        }
        best.map(|(_, _, q)| self.grid_to_world(q))
    }

    /// 8-bit encoding used for files and image metrics.
    pub fn to_pixels(&self) -> Vec<u8> {
        self.cells.iter().map(|s| io::encode_cell(*s)).collect()
    }
}
