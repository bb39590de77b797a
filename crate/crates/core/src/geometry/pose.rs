use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::Vec2;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Rigid planar pose. x forward, y left, yaw counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub const IDENTITY: Self = Self { x: 0.0, y: 0.0, yaw: 0.0 };

    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw: normalize_angle(yaw) }
    }

    pub fn from_parts(position: Vec2, yaw: f64) -> Self {
        Self::new(position.x, position.y, yaw)
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    #[inline]
    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.yaw)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }

    /// Maps a point expressed in this pose's frame into the parent frame.
    #[inline]
    pub fn apply(&self, point: Vec2) -> Vec2 {
        point.rotate(self.yaw) + self.position()
    }

    /// Rotates a free vector from this frame into the parent frame.
    #[inline]
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        v.rotate(self.yaw)
    }

    pub fn inverse(&self) -> Self {
        let t = (-self.position()).rotate(-self.yaw);
        Self::new(t.x, t.y, -self.yaw)
    }

    /// `self ∘ other`: `other` is expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose2) -> Self {
        let p = self.apply(other.position());
        Self::new(p.x, p.y, self.yaw + other.yaw)
    }

    /// This pose expressed in the frame of `reference`.
    pub fn relative_to(&self, reference: &Pose2) -> Self {
        reference.inverse().compose(self)
    }
}

/// Rigid transform of `point` from the frame defined by `pose` into the parent frame.
pub fn se2_apply(pose: &Pose2, point: Vec2) -> Vec2 {
    pose.apply(point)
}
