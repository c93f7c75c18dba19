//! PGM image + `key: value` metadata map files.

use std::fs;
use std::path::{Path, PathBuf};

use super::{CellState, OccupancyGrid};
use crate::error::MapError;
use crate::geometry::Pose2D;

pub const OCCUPIED_PIXEL: u8 = 0;
pub const FREE_PIXEL: u8 = 254;
pub const UNKNOWN_PIXEL: u8 = 205;

/// Contents of the metadata file accompanying a map image.
#[derive(Debug, Clone, PartialEq)]
pub struct MapMetadata {
    pub image: String,
    pub resolution: f64,
    pub origin: Pose2D,
    pub negate: bool,
    pub occupied_thresh: f64,
    pub free_thresh: f64,
}

impl MapMetadata {
    pub fn new(image: impl Into<String>, resolution: f64, origin: Pose2D) -> Self {
        Self {
            image: image.into(),
            resolution,
            origin,
            negate: false,
            occupied_thresh: 0.65,
            free_thresh: 0.196,
        }
    }

    pub fn classify(&self, v: u8) -> CellState {
        let p = if self.negate {
            v as f64 / 255.0
        } else {
            (255.0 - v as f64) / 255.0
        };
        if p > self.occupied_thresh {
            CellState::Occupied
        } else if p < self.free_thresh {
            CellState::Free
        } else {
            CellState::Unknown
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, MapError> {
        let bad = |reason: String| MapError::BadMetadata {
            path: path.to_path_buf(),
            reason,
        };
        let mut image = None;
        let mut resolution = None;
        let mut origin = None;
        let mut meta = MapMetadata::new("", 1.0, Pose2D::default());
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `key: value`, got `{line}`")))?;
            let value = value.trim();
            let number = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("`{}` is not a number", v)));
            match key.trim() {
                "image" => image = Some(value.trim_matches('"').to_string()),
                "resolution" => resolution = Some(number(value)?),
                "origin" => {
                    let inner = value
                        .strip_prefix('[')
                        .and_then(|v| v.strip_suffix(']'))
                        .ok_or_else(|| bad("origin must be `[x, y, yaw]`".into()))?;
                    let parts = inner
                        .split(',')
                        .map(|p| number(p.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    if parts.len() != 3 {
                        return Err(bad(format!("origin has {} components", parts.len())));
                    }
                    origin = Some(Pose2D::new(parts[0], parts[1], parts[2]));
                }
                "negate" => {
                    meta.negate = match value {
                        "0" | "false" => false,
                        "1" | "true" => true,
                        other => return Err(bad(format!("negate must be 0 or 1, got `{other}`"))),
                    }
                }
                "occupied_thresh" => meta.occupied_thresh = number(value)?,
                "free_thresh" => meta.free_thresh = number(value)?,
                // unrelated keys (e.g. `mode`) are tolerated
                _ => {}
            }
        }
        meta.image = image.ok_or_else(|| bad("missing `image`".into()))?;
        meta.resolution = resolution.ok_or_else(|| bad("missing `resolution`".into()))?;
        meta.origin = origin.ok_or_else(|| bad("missing `origin`".into()))?;
        if !(meta.resolution > 0.0) || !meta.resolution.is_finite() {
            return Err(bad(format!("resolution must be > 0, got {}", meta.resolution)));
        }
        if !(0.0..=1.0).contains(&meta.free_thresh)
            || !(0.0..=1.0).contains(&meta.occupied_thresh)
            || meta.free_thresh > meta.occupied_thresh
        {
            return Err(bad("thresholds must satisfy 0 <= free <= occupied <= 1".into()));
        }
        Ok(meta)
    }

    pub fn render(&self) -> String {
        format!(
            "image: {}\nresolution: {}\norigin: [{}, {}, {}]\nnegate: {}\noccupied_thresh: {}\nfree_thresh: {}\n",
            self.image,
            self.resolution,
            self.origin.x,
            self.origin.y,
            self.origin.theta,
            u8::from(self.negate),
            self.occupied_thresh,
            self.free_thresh
        )
    }
}

pub(crate) fn encode_cell(s: CellState) -> u8 {
    match s {
        CellState::Occupied => OCCUPIED_PIXEL,
        CellState::Free => FREE_PIXEL,
        CellState::Unknown => UNKNOWN_PIXEL,
    }
}

struct Pgm {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Pgm, MapError> {
    let bad = |reason: &str| MapError::BadImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut pos = 0;
    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos).ok_or_else(|| bad("empty file"))?;
    if magic != "P5" {
        return Err(bad("expected binary PGM (P5)"));
    }
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["width", "height", "maxval"]) {
        *slot = next_token(&mut pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("bad {name}")))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(bad("truncated raster"));
    }
    let pixels = bytes[pos..pos + n]
        .iter()
        .map(|&v| {
            if maxval == 255 {
                v
            } else {
                ((v as usize * 255 + maxval / 2) / maxval).min(255) as u8
            }
        })
        .collect();
    Ok(Pgm { width, height, pixels })
}

fn read(path: &Path) -> Result<Vec<u8>, MapError> {
    fs::read(path).map_err(|source| MapError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a map from an explicit image path and metadata path. The
/// metadata's own `image` key is not consulted.
pub fn load_map(image_path: &Path, meta_path: &Path) -> Result<OccupancyGrid, MapError> {
    let text = String::from_utf8(read(meta_path)?).map_err(|_| MapError::BadMetadata {
        path: meta_path.to_path_buf(),
        reason: "not UTF-8".into(),
    })?;
    let meta = MapMetadata::parse(&text, meta_path)?;
    let pgm = parse_pgm(&read(image_path)?, image_path)?;
    let mut cells = Vec::with_capacity(pgm.width * pgm.height);
    // image rows are stored top-down
    for row in (0..pgm.height).rev() {
        let line = &pgm.pixels[row * pgm.width..(row + 1) * pgm.width];
        cells.extend(line.iter().map(|&v| meta.classify(v)));
    }
    OccupancyGrid::new(pgm.width, pgm.height, meta.resolution, meta.origin, cells)
}

/// Loads a map from its metadata file, resolving `image` relative to it.
pub fn load_map_yaml(meta_path: &Path) -> Result<OccupancyGrid, MapError> {
    let text = String::from_utf8(read(meta_path)?).map_err(|_| MapError::BadMetadata {
        path: meta_path.to_path_buf(),
        reason: "not UTF-8".into(),
    })?;
    let meta = MapMetadata::parse(&text, meta_path)?;
    let image: PathBuf = match meta_path.parent() {
        Some(dir) => dir.join(&meta.image),
        None => PathBuf::from(&meta.image),
    };
    load_map(&image, meta_path)
}

/// Writes a P5 image and metadata file. The metadata's `image` entry is the
/// image path relative to the metadata file's directory when possible.
pub fn save_map(grid: &OccupancyGrid, image_path: &Path, meta_path: &Path) -> Result<(), MapError> {
    if grid.width() == 0 || grid.height() == 0 {
        return Err(MapError::InvalidGrid("cannot save an empty grid".into()));
    }
    let mut bytes = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    for row in (0..grid.height()).rev() {
        let line = &grid.cells()[row * grid.width()..(row + 1) * grid.width()];
        bytes.extend(line.iter().map(|s| encode_cell(*s)));
    }
    let write = |path: &Path, data: &[u8]| {
        fs::write(path, data).map_err(|source| MapError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(image_path, &bytes)?;
    let image_ref = match (meta_path.parent(), image_path.parent()) {
        (Some(a), Some(b)) if a == b => image_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        _ => image_path.to_string_lossy().into_owned(),
    };
    let meta = MapMetadata::new(image_ref, grid.resolution(), grid.origin());
    write(meta_path, meta.render().as_bytes())
}
