//! Exact Euclidean distance transform (Meijster, Roerdink & Hesselink).

use super::{CellIndex, CellState, OccupancyGrid};
use crate::geometry::{Point2, Pose2D};

/// Per-cell distance to the nearest Occupied cell center.
///
/// Squared distances are kept in integer cell units so the field can be
/// compared exactly; [`DistanceField::meters`] converts on demand. Cells of
/// a grid without any Occupied cell hold `u64::MAX` and read as `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2D,
    squared: Vec<u64>,
    has_sites: bool,
}

impl DistanceField {
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

    /// `false` when the source grid had no Occupied cell (sentinel field).
    pub fn has_sites(&self) -> bool {
        self.has_sites
    }

    pub fn squared_cells(&self) -> &[u64] {
        &self.squared
    }

    pub fn meters(&self, c: CellIndex) -> f64 {
        self.meters_at(c.y * self.width + c.x)
    }

    #[inline]
    pub fn meters_at(&self, i: usize) -> f64 {
        match self.squared[i] {
            u64::MAX => f64::INFINITY,
            sq => (sq as f64).sqrt() * self.resolution,
        }
    }

    /// Distance at the cell containing `p`, `None` off the grid.
    pub fn at_world(&self, p: Point2) -> Option<f64> {
        let g = (p - self.origin.position()).rotate(-self.origin.theta) * (1.0 / self.resolution);
        let (fx, fy) = (g.x.floor(), g.y.floor());
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some(self.meters_at(fy as usize * self.width + fx as usize))
    }
}

pub fn distance_transform(grid: &OccupancyGrid) -> DistanceField {
    let (w, h) = (grid.width(), grid.height());
    let cells = grid.cells();
    let has_sites = cells.contains(&CellState::Occupied);
    let mut field = DistanceField {
        width: w,
        height: h,
        resolution: grid.resolution(),
        origin: grid.origin(),
        squared: vec![u64::MAX; w * h],
        has_sites,
    };
    if !has_sites {
        return field;
    }

    // Phase 1: vertical distance to the nearest site within each column.
    let inf = (w + h) as i64;
    let mut g = vec![inf; w * h];
    for x in 0..w {
        if cells[x] == CellState::Occupied {
            g[x] = 0;
        }
        for y in 1..h {
            let i = y * w + x;
            g[i] = if cells[i] == CellState::Occupied {
                0
            } else {
                (g[i - w] + 1).min(inf)
            };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            let i = y * w + x;
            if g[i + w] < g[i] {
                g[i] = g[i + w] + 1;
            }
        }
    }

    // Phase 2: lower envelope of parabolas along each row.
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i].pow(2);
        let sep = |i: usize, u: usize| {
            let (ii, uu) = (i as i64, u as i64);
            (uu * uu - ii * ii + row[u].pow(2) - row[i].pow(2)).div_euclid(2 * (uu - ii))
        };
        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let wpos = 1 + sep(s[q as usize], u);
                if wpos < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = wpos;
                }
            }
        }
        for u in (0..w).rev() {
            let d = f(u as i64, s[q as usize]);
            field.squared[y * w + u] = d as u64;
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    field
}
