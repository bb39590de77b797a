use serde::{Deserialize, Serialize};

use super::{GeometryError, OrientedBox, Vec2};

/// Simple polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    /// Validates and normalizes winding to counter-clockwise.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-12 {
            return Err(GeometryError::ZeroArea);
        }
        if !is_simple(&vertices) {
            return Err(GeometryError::SelfIntersecting);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[x0,x1] × [y0,y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)])
    }

    pub fn from_box(b: &OrientedBox) -> Self {
        Self { vertices: b.corners().to_vec() }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut a = 0.0;
        let mut c = Vec2::ZERO;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            a += w;
            c += (p + q) * w;
        }
        c / (3.0 * a)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Closed point-in-polygon test (boundary counts as inside).
    pub fn contains(&self, p: Vec2) -> bool {
        for (a, b) in self.edges() {
            if point_segment_distance(p, a, b) <= 1e-12 {
                return true;
            }
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn aabb(&self) -> (Vec2, Vec2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// True if the closed segment `a-b` touches the polygon boundary or interior.
    pub fn intersects_segment(&self, a: Vec2, b: Vec2) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        self.edges().any(|(p, q)| segments_intersect(a, b, p, q))
    }
}

impl TryFrom<Vec<Vec2>> for Polygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Vec2>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Vec2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn signed_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    let mut a = 0.0;
    for i in 0..n {
        a += vs[i].cross(vs[(i + 1) % n]);
    }
    0.5 * a
}

fn is_simple(vs: &[Vec2]) -> bool {
    let n = vs.len();
    for i in 0..n {
        let a0 = vs[i];
        let a1 = vs[(i + 1) % n];
        if a0 == a1 {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let b0 = vs[j];
            let b1 = vs[(j + 1) % n];
            if adjacent {
                // Adjacent edges may only share their common vertex: reject folding back.
                let (shared, p, q) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                let d1 = p - shared;
                let d2 = q - shared;
                if d1.cross(d2).abs() <= 1e-12 * d1.norm() * d2.norm() && d1.dot(d2) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a0, a1, b0, b1) {
                return false;
            }
        }
    }
    true
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-12
        && p.x <= a.x.max(b.x) + 1e-12
        && p.y >= a.y.min(b.y) - 1e-12
        && p.y <= a.y.max(b.y) + 1e-12
}

/// Closed segment intersection including touching and collinear overlap.
pub fn segments_intersect(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(b0, b1, a0))
        || (d2 == 0.0 && on_segment(b0, b1, a1))
        || (d3 == 0.0 && on_segment(a0, a1, b0))
        || (d4 == 0.0 && on_segment(a0, a1, b1))
}

/// Intersection point of two segments when they cross at a single point.
pub fn segment_intersection_point(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<(Vec2, f64, f64)> {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.cross(s);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = (b0 - a0).cross(s) / denom;
    let u = (b0 - a0).cross(r) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        let t = t.clamp(0.0, 1.0);
        Some((a0 + r * t, t, u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

pub fn segment_segment_distance(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

/// Minimum distance between two polygonal regions; 0 when they touch or overlap.
pub fn polygon_min_distance(a: &Polygon, b: &Polygon) -> f64 {
    if a.contains(b.vertices[0]) || b.contains(a.vertices[0]) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p0, p1) in a.edges() {
        for (q0, q1) in b.edges() {
            let d = segment_segment_distance(p0, p1, q0, q1);
            if d < best {
                best = d;
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
    }
    best
}

/// Convex hull (Andrew's monotone chain). Collinear points dropped; `None`
/// if fewer than three non-collinear points.
pub fn convex_hull(points: &[Vec2]) -> Option<Polygon> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return None;
    }
    let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Polygon::new(lower).ok()
}
