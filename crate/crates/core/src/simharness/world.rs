//! Vector worlds: tagged polygons and polylines in world meters.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, MapError};
use crate::geometry::Point2;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementTag {
    Building,
    /// Steps, containers and similar clutter.
    SmallFeature,
    /// Vegetation or slopes whose apparent outline varies.
    NoisyContour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Polygon,
    Polyline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldElement {
    pub tag: ElementTag,
    pub shape: Shape,
    pub vertices: Vec<Point2>,
}

impl WorldElement {
    pub fn polygon(tag: ElementTag, vertices: Vec<Point2>) -> Self {
        Self {
            tag,
            shape: Shape::Polygon,
            vertices,
        }
    }

    pub fn polyline(tag: ElementTag, vertices: Vec<Point2>) -> Self {
        Self {
            tag,
            shape: Shape::Polyline,
            vertices,
        }
    }

    /// Axis-aligned rectangle, counter-clockwise from the lower-left corner.
    pub fn rect(tag: ElementTag, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::polygon(
            tag,
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
        )
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        let count = match self.shape {
            Shape::Polygon if n >= 3 => n,
            _ => n.saturating_sub(1),
        };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Point2::new(x0, y0),
            max: Point2::new(x1, y1),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorWorld {
    pub bounds: Bounds,
    pub elements: Vec<WorldElement>,
}

/// A world edge with the tag of the element it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
    pub tag: ElementTag,
}

fn segments_cross(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl VectorWorld {
    pub fn segments(&self) -> Vec<Segment> {
        self.elements
            .iter()
            .flat_map(|e| e.edges().map(move |(a, b)| Segment { a, b, tag: e.tag }))
            .collect()
    }

    pub fn buildings(&self) -> impl Iterator<Item = &WorldElement> {
        self.elements
            .iter()
            .filter(|e| e.tag == ElementTag::Building && e.shape == Shape::Polygon)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let b = &self.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(EvalError::InvalidInput("world bounds are empty".into()));
        }
        for (i, e) in self.elements.iter().enumerate() {
            let min = if e.shape == Shape::Polygon { 3 } else { 2 };
            if e.vertices.len() < min {
                return Err(EvalError::InvalidInput(format!("element {i} has too few vertices")));
            }
            if e.vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
                return Err(EvalError::InvalidInput(format!("element {i} has a non-finite vertex")));
            }
            if e.shape == Shape::Polygon {
                let edges: Vec<_> = e.edges().collect();
                let n = edges.len();
                for a in 0..n {
                    for c in a + 2..n {
                        if a == 0 && c == n - 1 {
                            continue;
                        }
                        if segments_cross(edges[a].0, edges[a].1, edges[c].0, edges[c].1) {
                            return Err(EvalError::InvalidInput(format!("polygon {i} intersects itself")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let w: VectorWorld =
            serde_json::from_str(&text).map_err(|e| EvalError::InvalidInput(format!("{}: {e}", path.display())))?;
        w.validate()?;
        Ok(w)
    }
}

/// Corners of the large buildings; clutter keeps clear of them.
const CAMPUS_BUILDINGS: [(f64, f64, f64, f64); 13] = [
    // central block, 180 m long
    (20.3, 19.4, 200.3, 31.4),
    // south row
    (24.2, 2.3, 38.6, 9.2),
    (46.7, 2.6, 58.1, 9.4),
    (66.4, 2.1, 84.3, 9.1),
    (92.6, 2.4, 104.2, 9.3),
    (112.3, 2.2, 130.7, 9.2),
    (138.4, 2.5, 150.6, 9.4),
    (158.2, 2.3, 176.7, 9.1),
    (184.6, 2.4, 198.3, 9.3),
    // east
    (212.4, 18.2, 218.3, 32.6),
    // north-east row; nothing north of the route west of x = 140
    (142.6, 42.3, 156.2, 48.1),
    (164.3, 42.6, 178.4, 48.2),
    (186.2, 41.4, 198.7, 48.3),
];

/// Stretch of the northern passage with a plain facade to the south and a
/// noisy contour to the north.
pub const CAMPUS_CORRIDOR_X: (f64, f64) = (5.0, 135.0);
pub const CAMPUS_CORRIDOR_Y: f64 = 43.0;

/// Default loop around the central block.
pub fn campus_route() -> Vec<Point2> {
    vec![
        Point2::new(12.0, 14.0),
        Point2::new(207.0, 14.0),
        Point2::new(207.0, 37.0),
        Point2::new(12.0, 37.0),
        Point2::new(12.0, 14.0),
    ]
}

fn noisy_polyline(rng: &mut impl Rng, from: Point2, to: Point2, step: f64, amplitude: f64) -> Vec<Point2> {
    let len = from.dist(to);
    let n = (len / step).ceil() as usize;
    let dir = (to - from) * (1.0 / len);
    let normal = Point2::new(-dir.y, dir.x);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (0..=n)
        .map(|i| {
            let s = len * i as f64 / n as f64;
            let wobble =
                0.5 * amplitude * (s / 3.0 + phase).sin() + amplitude * 0.5 * rng.sample::<f64, _>(StandardNormal);
            from + dir * s + normal * wobble
        })
        .collect()
}

/// Desk-scale campus analog: 220 m × 50 m, a 180 m central building that
/// can be circled, a southern row of buildings, an eastern and a partial
/// northern row, clutter, and a noisy contour opposite the plain northern
/// facade.
pub fn campus_world(seed: u64) -> VectorWorld {
    let mut rng = stream(seed, &[tag::WORLD]);
    let mut elements: Vec<WorldElement> = CAMPUS_BUILDINGS
        .iter()
        .map(|&(x0, y0, x1, y1)| WorldElement::rect(ElementTag::Building, x0, y0, x1, y1))
        .collect();

    elements.push(WorldElement::polyline(
        ElementTag::NoisyContour,
        noisy_polyline(
            &mut rng,
            Point2::new(CAMPUS_CORRIDOR_X.0, CAMPUS_CORRIDOR_Y),
            Point2::new(CAMPUS_CORRIDOR_X.1, CAMPUS_CORRIDOR_Y),
            0.5,
            0.03,
        ),
    ));
    // slope along the western edge
    elements.push(WorldElement::polyline(
        ElementTag::NoisyContour,
        noisy_polyline(&mut rng, Point2::new(4.0, 4.0), Point2::new(4.0, 40.0), 0.5, 0.2),
    ));

    // clutter: steps and containers in the open areas, clear of the route
    // lanes, building corners and the corridor
    let corners: Vec<Point2> = elements
        .iter()
        .filter(|e| e.tag == ElementTag::Building)
        .flat_map(|e| e.vertices.clone())
        .collect();
    let zones: [(f64, f64, f64, f64); 7] = [
        // between the south row and the southern lane
        (22.0, 10.2, 200.0, 11.6),
        // between the southern lane and the central block
        (22.0, 16.3, 198.0, 17.6),
        // north of the northern lane, east of the corridor
        (141.0, 39.2, 200.0, 40.4),
        // east passage
        (202.0, 18.0, 204.6, 32.0),
        (209.4, 10.0, 211.2, 40.0),
        // west passage
        (7.0, 18.0, 9.6, 33.0),
        (14.4, 18.0, 18.0, 33.0),
    ];
    let mut placed = 0;
    let mut attempts = 0;
    while placed < 40 && attempts < 4000 {
        attempts += 1;
        let z = zones[rng.random_range(0..zones.len())];
        let (w, h): (f64, f64) = (rng.random_range(0.6..1.6), rng.random_range(0.5..1.0));
        let x0: f64 = rng.random_range(z.0..(z.2 - w).max(z.0 + 1e-3));
        let y0: f64 = rng.random_range(z.1..(z.3 - h).max(z.1 + 1e-3));
        let (x1, y1) = ((x0 + w).min(z.2), (y0 + h).min(z.3));
        let c = Point2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        if corners.iter().any(|k| k.dist(c) < 3.0 + w) {
            continue;
        }
        let clash = elements.iter().filter(|e| e.tag == ElementTag::SmallFeature).any(|e| {
            let v = &e.vertices;
            !(x1 + 0.5 < v[0].x || x0 - 0.5 > v[2].x || y1 + 0.5 < v[0].y || y0 - 0.5 > v[2].y)
        });
        if clash {
            continue;
        }
        elements.push(WorldElement::rect(ElementTag::SmallFeature, x0, y0, x1, y1));
        placed += 1;
    }

    VectorWorld {
        bounds: Bounds::new(0.0, 0.0, 220.0, 50.0),
        elements,
    }
}
