//! Ground-truth rasterization and the three map-degradation generators.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::world::{Bounds, ElementTag, Shape, VectorWorld, WorldElement};
use crate::error::EvalError;
use crate::geometry::{Point2, Pose2D};
use crate::gridmap::{traverse, CellIndex, CellState, OccupancyGrid};
use crate::mcl::TimedPose;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TlsProfile {
    pub boundary_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlamProfile {
    pub boundary_sigma: f64,
    pub warp_amplitude: f64,
    pub warp_wavelength: f64,
    /// Use `f64::INFINITY` (JSON `null`) for unlimited visibility.
    #[serde(with = "infinite_as_null")]
    pub visibility_range: f64,
    /// Spacing of the trajectory poses used for visibility (meters).
    pub pose_spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PabcProfile {
    pub snap_grid: f64,
    pub contour_offset_sigma: f64,
}

impl Default for TlsProfile {
    fn default() -> Self {
        Self { boundary_sigma: 0.07 }
    }
}

impl Default for SlamProfile {
    fn default() -> Self {
        Self {
            boundary_sigma: 0.1,
            warp_amplitude: 0.12,
            warp_wavelength: 8.0,
            visibility_range: 20.0,
            pose_spacing: 1.0,
        }
    }
}

impl Default for PabcProfile {
    fn default() -> Self {
        Self {
            snap_grid: 1.0,
            contour_offset_sigma: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DegradationProfile {
    TlsLike(TlsProfile),
    SlamLike(SlamProfile),
    PabcLike(PabcProfile),
}

impl DegradationProfile {
    pub fn validate(&self) -> Result<(), EvalError> {
        let lengths: Vec<f64> = match self {
            DegradationProfile::TlsLike(p) => vec![p.boundary_sigma],
            DegradationProfile::SlamLike(p) => vec![
                p.boundary_sigma,
                p.warp_amplitude,
                p.warp_wavelength,
                p.visibility_range,
                p.pose_spacing,
            ],
            DegradationProfile::PabcLike(p) => vec![p.snap_grid, p.contour_offset_sigma],
        };
        if lengths.iter().any(|v| !(*v >= 0.0)) {
            return Err(EvalError::InvalidInput("degradation lengths must be >= 0".into()));
        }
        Ok(())
    }

    /// Largest distance any occupied content may move from its true place.
    pub fn displacement_bound(&self) -> f64 {
        match self {
            DegradationProfile::TlsLike(p) => 3.0 * p.boundary_sigma,
            DegradationProfile::SlamLike(p) => 3.0 * p.boundary_sigma + p.warp_amplitude,
            DegradationProfile::PabcLike(p) => 3.0 * p.contour_offset_sigma + p.snap_grid / std::f64::consts::SQRT_2,
        }
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn blank(bounds: &Bounds, resolution: f64) -> Result<OccupancyGrid, EvalError> {
    if !(resolution > 0.0) {
        return Err(EvalError::InvalidInput("resolution must be positive".into()));
    }
    if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(EvalError::InvalidInput("bounds are empty".into()));
    }
    let w = (bounds.width() / resolution - 1e-9).ceil() as usize;
    let h = (bounds.height() / resolution - 1e-9).ceil() as usize;
    Ok(OccupancyGrid::filled(
        w,
        h,
        resolution,
        Pose2D::new(bounds.min.x, bounds.min.y, 0.0),
        CellState::Free,
    )?)
}

/// Marks every cell the segment passes through.
fn draw_segment(grid: &mut OccupancyGrid, a: Point2, b: Point2) {
    let (ga, gb) = (grid.world_to_grid(a), grid.world_to_grid(b));
    let len = ga.dist(gb);
    let dir = if len > 0.0 {
        (gb - ga) * (1.0 / len)
    } else {
        Point2::new(1.0, 0.0)
    };
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    traverse(ga, dir, len, |x, y, _| {
        if x >= 0 && y >= 0 && x < w && y < h {
            grid.set(CellIndex::new(x as usize, y as usize), CellState::Occupied);
        }
        true
    });
}

/// Even-odd fill of cells whose centers lie inside the polygon.
fn fill_polygon(grid: &mut OccupancyGrid, vertices: &[Point2]) {
    let g: Vec<Point2> = vertices.iter().map(|v| grid.world_to_grid(*v)).collect();
    let n = g.len();
    let y_lo = g.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let y_hi = (g.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil().max(0.0) as usize).min(grid.height());
    let mut xs = Vec::new();
    for y in y_lo..y_hi {
        let cy = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (p, q) = (g[i], g[(i + 1) % n]);
            if (p.y <= cy) != (q.y <= cy) {
                xs.push(p.x + (cy - p.y) / (q.y - p.y) * (q.x - p.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks(2) {
            if let [x0, x1] = pair {
                let from = (x0 - 0.5).ceil().max(0.0) as usize;
                let to = ((x1 - 0.5).floor() + 1.0).clamp(0.0, grid.width() as f64) as usize;
                for x in from..to {
                    grid.set(CellIndex::new(x, y), CellState::Occupied);
                }
            }
        }
    }
}

fn draw_element(grid: &mut OccupancyGrid, e: &WorldElement, fill: bool) {
    for (a, b) in e.edges() {
        draw_segment(grid, a, b);
    }
    if fill && e.shape == Shape::Polygon && e.tag == ElementTag::Building {
        fill_polygon(grid, &e.vertices);
    }
}

/// Ground-truth raster: element outlines and building interiors Occupied,
/// everything else Free.
pub fn rasterize(world: &VectorWorld, resolution: f64, bounds: &Bounds) -> Result<OccupancyGrid, EvalError> {
    let mut grid = blank(bounds, resolution)?;
    for e in &world.elements {
        draw_element(&mut grid, e, true);
    }
    Ok(grid)
}

fn truncated_normal(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v.abs() <= 3.0 {
            return sigma * v;
        }
    }
}

fn is_boundary(grid: &OccupancyGrid, c: CellIndex) -> bool {
    let (x, y) = (c.x as i64, c.y as i64);
    [(1, 0), (-1, 0), (0, 1), (0, -1)]
        .iter()
        .any(|(dx, dy)| grid.get_checked(x + dx, y + dy) != Some(CellState::Occupied))
}

fn place(out: &mut OccupancyGrid, p: Point2) {
    if let Some(c) = out.world_to_cell(p) {
        out.set(c, CellState::Occupied);
    }
}

/// Boundary cells re-placed with truncated Gaussian jitter; interior kept.
pub fn degrade_tls(truth: &OccupancyGrid, profile: &TlsProfile, seed: u64) -> Result<OccupancyGrid, EvalError> {
    DegradationProfile::TlsLike(*profile).validate()?;
    if profile.boundary_sigma == 0.0 {
        return Ok(truth.clone());
    }
    let moves: Vec<Option<Point2>> = (0..truth.len())
        .into_par_iter()
        .map(|i| {
            let c = truth.cell_of_index(i);
            if truth.get(c) != CellState::Occupied || !is_boundary(truth, c) {
                return None;
            }
            let mut rng = stream(seed, &[tag::TLS, i as u64]);
            let dx = truncated_normal(&mut rng, profile.boundary_sigma);
            let dy = truncated_normal(&mut rng, profile.boundary_sigma);
            Some(truth.cell_to_world(c) + Point2::new(dx, dy))
        })
        .collect();
    let mut out = truth.clone();
    for (i, m) in moves.iter().enumerate() {
        if m.is_some() {
            out.set(truth.cell_of_index(i), CellState::Free);
        }
    }
    for p in moves.into_iter().flatten() {
        place(&mut out, p);
    }
    Ok(out)
}

/// Cells seen from the trajectory: `(seen free, seen occupied)` masks.
fn visibility(truth: &OccupancyGrid, poses: &[Point2], range: f64) -> (Vec<bool>, Vec<bool>) {
    let res = truth.resolution();
    let (w, h) = (truth.width() as i64, truth.height() as i64);
    let diag = (truth.width() as f64).hypot(truth.height() as f64);
    let max_t = if range.is_finite() {
        (range / res).min(diag)
    } else {
        diag
    };
    let rays = ((std::f64::consts::TAU * max_t).ceil() as usize).max(8);
    let n = truth.len();
    poses
        .par_iter()
        .fold(
            || (vec![false; n], vec![false; n]),
            |(mut free, mut occ), p| {
                let g = truth.world_to_grid(*p);
                for k in 0..rays {
                    let a = std::f64::consts::TAU * k as f64 / rays as f64;
                    traverse(g, Point2::new(a.cos(), a.sin()), max_t, |x, y, _| {
                        if x < 0 || y < 0 || x >= w || y >= h {
                            return false;
                        }
                        let i = (y * w + x) as usize;
                        if truth.cells()[i] == CellState::Occupied {
                            occ[i] = true;
                            false
                        } else {
                            free[i] = true;
                            true
                        }
                    });
                }
                (free, occ)
            },
        )
        .reduce(
            || (vec![false; n], vec![false; n]),
            |(mut fa, mut oa), (fb, ob)| {
                fa.iter_mut().zip(fb).for_each(|(a, b)| *a |= b);
                oa.iter_mut().zip(ob).for_each(|(a, b)| *a |= b);
                (fa, oa)
            },
        )
}

/// Thins the trajectory to poses at least `spacing` apart.
fn sample_poses(trajectory: &[TimedPose], spacing: f64) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::new();
    for p in trajectory {
        let q = p.pose.position();
        if out.last().is_none_or(|l| l.dist(q) >= spacing) {
            out.push(q);
        }
    }
    out
}

/// Smooth displacement field: two plane waves with seeded directions and
/// phases, one per component, with norm at most `amplitude`.
#[derive(Debug, Clone, Copy)]
pub struct WarpField {
    amplitude: f64,
    k: [Point2; 2],
    phase: [f64; 2],
}

impl WarpField {
    pub fn new(amplitude: f64, wavelength: f64, seed: u64) -> Self {
        let mut rng = stream(seed, &[tag::SLAM, u64::MAX]);
        let mut wave = || {
            let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let k = if wavelength > 0.0 {
                std::f64::consts::TAU / wavelength
            } else {
                0.0
            };
            (Point2::new(dir.cos(), dir.sin()) * k, phase)
        };
        let (k0, p0) = wave();
        let (k1, p1) = wave();
        Self {
            amplitude,
            k: [k0, k1],
            phase: [p0, p1],
        }
    }

    pub fn at(&self, p: Point2) -> Point2 {
        Point2::new(
            self.amplitude * (self.k[0].dot(p) + self.phase[0]).sin(),
            self.amplitude * (self.k[1].dot(p) + self.phase[1]).sin(),
        ) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Visibility-masked ground truth with a smooth warp and boundary jitter;
/// cells never seen from the trajectory become Unknown.
pub fn degrade_slam(
    truth: &OccupancyGrid,
    trajectory: &[TimedPose],
    profile: &SlamProfile,
    seed: u64,
) -> Result<OccupancyGrid, EvalError> {
    DegradationProfile::SlamLike(*profile).validate()?;
    if trajectory.is_empty() {
        return Err(EvalError::EmptySet("trajectory is empty"));
    }
    let poses = sample_poses(trajectory, profile.pose_spacing);
    let (free, occ) = visibility(truth, &poses, profile.visibility_range);
    let warp = WarpField::new(profile.warp_amplitude, profile.warp_wavelength, seed);
    let mut out = truth.blank_like(CellState::Unknown);
    for (i, f) in free.iter().enumerate() {
        if *f {
            out.set(truth.cell_of_index(i), CellState::Free);
        }
    }
    let moved: Vec<Point2> = (0..truth.len())
        .into_par_iter()
        .filter(|&i| occ[i])
        .map(|i| {
            let p = truth.cell_to_world(truth.cell_of_index(i));
            let mut rng = stream(seed, &[tag::SLAM, i as u64]);
            let dx = truncated_normal(&mut rng, profile.boundary_sigma);
            let dy = truncated_normal(&mut rng, profile.boundary_sigma);
            p + warp.at(p) + Point2::new(dx, dy)
        })
        .collect();
    for p in moved {
        place(&mut out, p);
    }
    Ok(out)
}

/// Nearest multiple of `step` (identity when `step` is 0).
pub fn snap(v: f64, step: f64) -> f64 {
    if step > 0.0 {
        (v / step).round() * step
    } else {
        v
    }
}

/// Produces the map `profile` describes: TLS and SLAM variants degrade
/// `truth`, PABC is derived from the world's building outlines at the
/// resolution of `truth`.
pub fn build_map(
    profile: &DegradationProfile,
    world: &VectorWorld,
    truth: &OccupancyGrid,
    path: &[TimedPose],
    seed: u64,
) -> Result<OccupancyGrid, EvalError> {
    match profile {
        DegradationProfile::TlsLike(p) => degrade_tls(truth, p, seed),
        DegradationProfile::SlamLike(p) => degrade_slam(truth, path, p, seed),
        DegradationProfile::PabcLike(p) => derive_pabc(world, p, truth.resolution(), seed),
    }
}

/// Building outlines only, vertices snapped to a lattice and jittered,
/// rasterized without fill over the world bounds.
pub fn derive_pabc(
    world: &VectorWorld,
    profile: &PabcProfile,
    resolution: f64,
    seed: u64,
) -> Result<OccupancyGrid, EvalError> {
    DegradationProfile::PabcLike(*profile).validate()?;
    let mut grid = blank(&world.bounds, resolution)?;
    let mut any = false;
    for (b, e) in world.buildings().enumerate() {
        any = true;
        let vertices = e
            .vertices
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let mut rng = stream(seed, &[tag::PABC, b as u64, j as u64]);
                let dx = truncated_normal(&mut rng, profile.contour_offset_sigma);
                let dy = truncated_normal(&mut rng, profile.contour_offset_sigma);
                Point2::new(snap(v.x, profile.snap_grid) + dx, snap(v.y, profile.snap_grid) + dy)
            })
            .collect();
        draw_element(&mut grid, &WorldElement::polygon(ElementTag::Building, vertices), false);
    }
    if !any {
        return Err(EvalError::EmptySet("world has no buildings"));
    }
    Ok(grid)
}
