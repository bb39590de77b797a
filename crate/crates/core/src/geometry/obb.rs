use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose2, Vec2};

/// Rectangle footprint centered on a pose; `length` runs along the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Pose2,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn new(center: Pose2, length: f64, width: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() || !length.is_finite() || !width.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(width > 0.0 && length >= width) {
            return Err(GeometryError::InvalidBox { length, width });
        }
        Ok(Self { center, length, width })
    }

    pub fn half_extents(&self) -> (f64, f64) {
        (0.5 * self.length, 0.5 * self.width)
    }

    /// Unit axes: along the heading and to its left.
    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = self.center.heading();
        (u, u.perp())
    }

    /// Corners in counter-clockwise order starting front-right.
    pub fn corners(&self) -> [Vec2; 4] {
        let (hl, hw) = self.half_extents();
        let (u, v) = self.axes();
        let c = self.center.position();
        [c + u * hl - v * hw, c + u * hl + v * hw, c - u * hl + v * hw, c - u * hl - v * hw]
    }

    /// Closed containment test with a small tolerance.
    pub fn contains(&self, p: Vec2) -> bool {
        const EPS: f64 = 1e-9;
        let (hl, hw) = self.half_extents();
        let (u, v) = self.axes();
        let d = p - self.center.position();
        d.dot(u).abs() <= hl + EPS && d.dot(v).abs() <= hw + EPS
    }

    /// Radius of the circumscribed circle.
    pub fn bounding_radius(&self) -> f64 {
        let (hl, hw) = self.half_extents();
        hl.hypot(hw)
    }

    pub fn aabb(&self) -> (Vec2, Vec2) {
        let cs = self.corners();
        let mut lo = cs[0];
        let mut hi = cs[0];
        for c in &cs[1..] {
            lo.x = lo.x.min(c.x);
            lo.y = lo.y.min(c.y);
            hi.x = hi.x.max(c.x);
            hi.y = hi.y.max(c.y);
        }
        (lo, hi)
    }
}

fn project(corners: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in corners {
        let p = c.dot(axis);
        lo = lo.min(p);
        hi = hi.max(p);
    }
    (lo, hi)
}

/// Separating-axis test. Touching boxes count as overlapping.
pub fn obb_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let reach = a.bounding_radius() + b.bounding_radius();
    if a.center.position().distance(b.center.position()) > reach + 1e-9 {
        return false;
    }
    let ca = a.corners();
    let cb = b.corners();
    let (au, av) = a.axes();
    let (bu, bv) = b.axes();
    for axis in [au, av, bu, bv] {
        let (a0, a1) = project(&ca, axis);
        let (b0, b1) = project(&cb, axis);
        if a1 < b0 - 1e-12 || b1 < a0 - 1e-12 {
            return false;
        }
    }
    true
}
