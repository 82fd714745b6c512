//! Planar rigid transforms.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// A point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
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

/// Wraps an angle into `(-pi, pi]`. Values already in range are returned
/// bit-for-bit unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// SE(2) pose: rotation by `theta` followed by translation by `(x, y)`.
///
/// `theta` is kept in `(-pi, pi]` by every constructor and operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose")]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    theta: f64,
}

impl From<RawPose> for Pose2D {
    fn from(raw: RawPose) -> Self {
        Pose2D::new(raw.x, raw.y, raw.theta)
    }
}

impl Default for Pose2D {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose2D {
    pub const IDENTITY: Pose2D = Pose2D {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Maps a point expressed in this pose's frame into the parent frame.
    pub fn transform_point(&self, local: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }

    /// `self ∘ other`: the pose `other` (given in this frame) expressed in the parent frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let p = self.transform_point(other.translation());
        Pose2D::new(p.x, p.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// Maps a parent-frame point into this pose's frame.
    pub fn inverse_transform_point(&self, point: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = point.x - self.x;
        let dy = point.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// Componentwise difference `self - other` with the angle wrapped.
    pub fn delta_from(&self, other: &Pose2D) -> PoseDelta {
        PoseDelta {
            dx: self.x - other.x,
            dy: self.y - other.y,
            dtheta: normalize_angle(self.theta - other.theta),
        }
    }

    /// Moves `fraction` of the way toward `target`, taking the short way around in angle.
    pub fn interpolate(&self, target: &Pose2D, fraction: f64) -> Pose2D {
        let d = target.delta_from(self);
        Pose2D::new(
            self.x + fraction * d.dx,
            self.y + fraction * d.dy,
            self.theta + fraction * d.dtheta,
        )
    }
}

/// Componentwise pose difference. Unlike [`Pose2D`] the angle is not wrapped,
/// so signed per-round changes can cancel when summed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl PoseDelta {
    pub const ZERO: PoseDelta = PoseDelta {
        dx: 0.0,
        dy: 0.0,
        dtheta: 0.0,
    };

    pub const fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        Self { dx, dy, dtheta }
    }

    pub fn is_zero(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && self.dtheta == 0.0
    }
}

impl Add for PoseDelta {
    type Output = PoseDelta;
    fn add(self, rhs: PoseDelta) -> PoseDelta {
        PoseDelta::new(self.dx + rhs.dx, self.dy + rhs.dy, self.dtheta + rhs.dtheta)
    }
}
