//! Harris corners on the binary occupancy image and corner matching.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::Point2;
use crate::gridmap::{CellIndex, CellState, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarrisConfig {
    /// Gaussian std of the structure-tensor window, in cells.
    pub sigma: f64,
    pub k: f64,
    pub response_threshold: f64,
    /// Minimum spacing between reported corners, in cells.
    pub nms_radius: f64,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            k: 0.04,
            response_threshold: 1e-3,
            nms_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub position: Point2,
    pub cell: CellIndex,
    pub response: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CornerSet {
    pub corners: Vec<Corner>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable convolution with edge replication.
fn blur(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * src[y * w + clamp(x as i64 + j as i64 - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[clamp(y as i64 + j as i64 - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Harris response `det(M) − k·trace(M)²` for every cell.
pub fn harris_response(grid: &OccupancyGrid, config: &HarrisConfig) -> Vec<f64> {
    let (w, h) = (grid.width(), grid.height());
    if w == 0 || h == 0 {
        return Vec::new();
    }
    let img: Vec<f64> = grid
        .cells()
        .iter()
        .map(|s| if *s == CellState::Occupied { 1.0 } else { 0.0 })
        .collect();
    let at = |x: i64, y: i64| img[y.clamp(0, h as i64 - 1) as usize * w + x.clamp(0, w as i64 - 1) as usize];
    let mut ixx = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            // Sobel, normalized to unit gain
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1))
                / 8.0;
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1))
                / 8.0;
            let i = y as usize * w + x as usize;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let kernel = gaussian_kernel(config.sigma);
    let (sxx, syy, sxy) = (
        blur(&ixx, w, h, &kernel),
        blur(&iyy, w, h, &kernel),
        blur(&ixy, w, h, &kernel),
    );
    (0..w * h)
        .map(|i| {
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let tr = sxx[i] + syy[i];
            det - config.k * tr * tr
        })
        .collect()
}

/// Corners above threshold, thinned greedily from the strongest response
/// so that no two lie within `nms_radius` cells.
pub fn harris_corners(grid: &OccupancyGrid, config: &HarrisConfig) -> CornerSet {
    let response = harris_response(grid, config);
    let mut candidates: Vec<usize> = (0..response.len())
        .filter(|&i| response[i] > config.response_threshold)
        .collect();
    candidates.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));
    let r2 = config.nms_radius * config.nms_radius;
    let mut kept: Vec<CellIndex> = Vec::new();
    let mut corners = Vec::new();
    for i in candidates {
        let c = grid.cell_of_index(i);
        let close = kept.iter().any(|k| {
            let dx = k.x as f64 - c.x as f64;
            let dy = k.y as f64 - c.y as f64;
            dx * dx + dy * dy <= r2
        });
        if !close {
            kept.push(c);
            corners.push(Corner {
                position: grid.cell_to_world(c),
                cell: c,
                response: response[i],
            });
        }
    }
    CornerSet { corners }
}

/// Fraction of reference corners matched one-to-one by candidate corners
/// within `match_radius` meters; pairs are taken greedily, closest first.
pub fn corner_match_ratio(candidate: &CornerSet, reference: &CornerSet, match_radius: f64) -> Result<f64, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptySet("reference corner set is empty"));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, c) in candidate.corners.iter().enumerate() {
        for (j, r) in reference.corners.iter().enumerate() {
            let d = c.position.dist(r.position);
            if d <= match_radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut cand_used = vec![false; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut matched = 0usize;
    for (_, i, j) in pairs {
        if !cand_used[i] && !ref_used[j] {
            cand_used[i] = true;
            ref_used[j] = true;
            matched += 1;
        }
    }
    Ok(matched as f64 / reference.len() as f64)
}
