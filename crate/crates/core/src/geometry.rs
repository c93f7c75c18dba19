//! Planar geometry primitives shared by every module.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let a = (theta + PI).rem_euclid(TAU) - PI;
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}

/// Signed shortest rotation taking `from` onto `to`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Shortest-arc interpolation between two headings.
pub fn lerp_angle(a: f64, b: f64, s: f64) -> f64 {
    normalize_angle(a + angle_diff(b, a) * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        self + (other - self) * s
    }

    pub fn rotate(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Robot or world pose. `theta` is kept in `(-π, π]` by every constructor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// `self ⊕ delta`: applies a motion expressed in this pose's frame.
    pub fn compose(&self, delta: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Motion taking `self` to `other`, expressed in `self`'s frame.
    pub fn between(&self, other: &Pose2D) -> Pose2D {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: Point2) -> Point2 {
        p.rotate(self.theta) + self.position()
    }

    /// Linear in position, shortest-arc in heading.
    pub fn interpolate(&self, other: &Pose2D, s: f64) -> Pose2D {
        Pose2D::new(
            self.x + (other.x - self.x) * s,
            self.y + (other.y - self.y) * s,
            lerp_angle(self.theta, other.theta, s),
        )
    }
}

/// Rigid planar transform `p ↦ R(theta)·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Transform2D {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Transform2D {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self {
            theta: normalize_angle(theta),
            tx,
            ty,
        }
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.tx, self.ty)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        p.rotate(self.theta) + self.translation()
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Transform2D) -> Transform2D {
        let t = other.translation().rotate(self.theta) + self.translation();
        Transform2D::new(self.theta + other.theta, t.x, t.y)
    }

    pub fn inverse(&self) -> Transform2D {
        let t = (self.translation() * -1.0).rotate(-self.theta);
        Transform2D::new(-self.theta, t.x, t.y)
    }
}
