use super::{CellState, OccupancyGrid};
use crate::error::MapError;
use crate::geometry::Point2;

/// Range in meters to the first Occupied cell along the ray, or `None`
/// when nothing blocks it within `max_range`. Unknown cells do not block;
/// a ray starting inside an Occupied cell hits at 0.
///
/// Cells are visited one at a time (Amanatides–Woo traversal) and the
/// returned range is where the ray enters the blocking cell.
pub fn raycast(grid: &OccupancyGrid, origin: Point2, bearing: f64, max_range: f64) -> Result<Option<f64>, MapError> {
    let start = grid.world_to_cell(origin).ok_or(MapError::OutOfBounds {
        x: origin.x,
        y: origin.y,
    })?;
    if !(max_range > 0.0) {
        return Err(MapError::InvalidGrid(format!(
            "max_range must be positive, got {max_range}"
        )));
    }
    if grid.get(start) == CellState::Occupied {
        return Ok(Some(0.0));
    }
    let g = grid.world_to_grid(origin);
    let dir = Point2::new(1.0, 0.0).rotate(bearing - grid.origin().theta);
    let mut hit = None;
    traverse(g, dir, max_range / grid.resolution(), |x, y, t| {
        if t == 0.0 && x == start.x as i64 && y == start.y as i64 {
            return true;
        }
        match grid.get_checked(x, y) {
            None => false,
            Some(CellState::Occupied) => {
                hit = Some(t * grid.resolution());
                false
            }
            Some(_) => true,
        }
    });
    Ok(hit)
}

/// Visits the cells pierced by the ray `start + t·dir` (grid units, `dir`
/// of unit length) for `t ∈ [0, max_t]`, starting with the cell holding
/// `start`. `visit(x, y, t_enter)` returns false to stop.
pub(crate) fn traverse(start: Point2, dir: Point2, max_t: f64, mut visit: impl FnMut(i64, i64, f64) -> bool) {
    let (mut x, mut y) = (start.x.floor() as i64, start.y.floor() as i64);
    if !visit(x, y, 0.0) {
        return;
    }
    let step_x: i64 = if dir.x > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dir.y > 0.0 { 1 } else { -1 };
    let t_delta_x = if dir.x != 0.0 { 1.0 / dir.x.abs() } else { f64::INFINITY };
    let t_delta_y = if dir.y != 0.0 { 1.0 / dir.y.abs() } else { f64::INFINITY };
    let mut t_max_x = if dir.x > 0.0 {
        (x as f64 + 1.0 - start.x) * t_delta_x
    } else if dir.x < 0.0 {
        (start.x - x as f64) * t_delta_x
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dir.y > 0.0 {
        (y as f64 + 1.0 - start.y) * t_delta_y
    } else if dir.y < 0.0 {
        (start.y - y as f64) * t_delta_y
    } else {
        f64::INFINITY
    };
    loop {
        let t_enter = if t_max_x < t_max_y {
            x += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            y += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t_enter > max_t || !visit(x, y, t_enter) {
            return;
        }
    }
}
