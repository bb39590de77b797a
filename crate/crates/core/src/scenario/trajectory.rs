use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::geometry::{segment_intersection_point, segment_segment_distance, segments_intersect, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Arclength from the first waypoint, meters.
    pub s: f64,
}

impl Waypoint {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Planned path with a target speed per waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
    speeds: Vec<f64>,
}

pub const MAX_WAYPOINT_SPACING: f64 = 2.0;

impl Trajectory {
    /// Builds a trajectory through `points` at constant target speed.
    /// Duplicate consecutive points are dropped; long segments are subdivided.
    pub fn from_points(points: &[Vec2], speed: f64) -> Result<Self, ScenarioError> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for &p in points {
            if !p.is_finite() {
                return Err(ScenarioError::InvalidTrajectory("non-finite waypoint".into()));
            }
            match pts.last() {
                Some(&q) if q.distance(p) < 1e-9 => {}
                Some(&q) if q.distance(p) > MAX_WAYPOINT_SPACING => {
                    let n = (q.distance(p) / MAX_WAYPOINT_SPACING).ceil() as usize;
                    for i in 1..n {
                        pts.push(q.lerp(p, i as f64 / n as f64));
                    }
                    pts.push(p);
                }
                _ => pts.push(p),
            }
        }
        if pts.len() < 2 {
            return Err(ScenarioError::InvalidTrajectory("needs at least two distinct points".into()));
        }
        let mut waypoints = Vec::with_capacity(pts.len());
        let mut s = 0.0;
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                s += pts[i - 1].distance(*p);
            }
            waypoints.push(Waypoint { x: p.x, y: p.y, s });
        }
        let speeds = vec![speed; waypoints.len()];
        Ok(Self { waypoints, speeds })
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.speeds.iter_mut().for_each(|v| *v = speed);
        self
    }

    pub fn length(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.s)
    }

    pub fn start(&self) -> Vec2 {
        self.waypoints[0].position()
    }

    pub fn end(&self) -> Vec2 {
        self.waypoints[self.waypoints.len() - 1].position()
    }

    fn segment_index(&self, s: f64) -> usize {
        let n = self.waypoints.len();
        match self.waypoints.binary_search_by(|w| w.s.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Position at arclength `s`; extrapolates linearly past either end.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let i = self.segment_index(s);
        let a = self.waypoints[i];
        let b = self.waypoints[i + 1];
        let t = (s - a.s) / (b.s - a.s);
        a.position().lerp(b.position(), t)
    }

    /// Heading of the segment containing `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment_index(s);
        (self.waypoints[i + 1].position() - self.waypoints[i].position()).angle()
    }

    pub fn target_speed_at(&self, s: f64) -> f64 {
        let i = self.segment_index(s.clamp(0.0, self.length()));
        self.speeds[i]
    }

    /// Projects `p` onto the path, searching segments overlapping `[s_lo, s_hi]`.
    /// Returns `(s, signed lateral offset, +left)`.
    pub fn project_window(&self, p: Vec2, s_lo: f64, s_hi: f64) -> (f64, f64) {
        let i0 = self.segment_index(s_lo.max(0.0));
        let i1 = self.segment_index(s_hi.min(self.length()));
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in i0..=i1 {
            let a = self.waypoints[i];
            let b = self.waypoints[i + 1];
            let ab = b.position() - a.position();
            let len = b.s - a.s;
            let t = ((p - a.position()).dot(ab) / (len * len)).clamp(0.0, 1.0);
            let q = a.position() + ab * t;
            let d = p.distance(q);
            if d < best.0 {
                let lat = ab.cross(p - a.position()) / len;
                best = (d, a.s + t * len, lat);
            }
        }
        (best.1, best.2)
    }

    pub fn project(&self, p: Vec2) -> (f64, f64) {
        self.project_window(p, 0.0, self.length())
    }

    /// Rotates the whole path about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| {
                let p = w.position().rotate(angle);
                Waypoint { x: p.x, y: p.y, s: w.s }
            })
            .collect();
        Self { waypoints, speeds: self.speeds.clone() }
    }
}

/// A crossing between two planned paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCrossing {
    pub point: Vec2,
    pub s_a: f64,
    pub s_b: f64,
}

/// First crossing of `a` and `b` ordered by arclength along `a`. Touching counts.
/// When the paths never touch, the closest approach is reported if it is
/// within 0.5 m; otherwise `None`.
pub fn trajectory_intersection(a: &Trajectory, b: &Trajectory) -> Option<PathCrossing> {
    const NEAR: f64 = 0.5;
    let wa = a.waypoints();
    let wb = b.waypoints();
    let mut closest: Option<(f64, PathCrossing)> = None;
    for i in 0..wa.len() - 1 {
        let (a0, a1) = (wa[i].position(), wa[i + 1].position());
        let mut hit: Option<PathCrossing> = None;
        for j in 0..wb.len() - 1 {
            let (b0, b1) = (wb[j].position(), wb[j + 1].position());
            if segments_intersect(a0, a1, b0, b1) {
                let c = match segment_intersection_point(a0, a1, b0, b1) {
                    Some((p, t, u)) => PathCrossing {
                        point: p,
                        s_a: wa[i].s + t * (wa[i + 1].s - wa[i].s),
                        s_b: wb[j].s + u * (wb[j + 1].s - wb[j].s),
                    },
                    None => collinear_touch(a0, a1, wa[i].s, b0, b1, wb[j].s),
                };
                if hit.is_none_or(|h| c.s_a < h.s_a || (c.s_a == h.s_a && c.s_b < h.s_b)) {
                    hit = Some(c);
                }
            } else {
                let d = segment_segment_distance(a0, a1, b0, b1);
                if d <= NEAR && closest.is_none_or(|(best, _)| d < best) {
                    let (sa, pa) = nearest_on(a0, a1, wa[i].s, b0, b1);
                    let (sb, _) = nearest_on(b0, b1, wb[j].s, a0, a1);
                    closest = Some((d, PathCrossing { point: pa, s_a: sa, s_b: sb }));
                }
            }
        }
        if hit.is_some() {
            return hit;
        }
    }
    closest.map(|(_, c)| c)
}

/// Earliest point of `a` lying on the collinear segment `b`.
fn collinear_touch(a0: Vec2, a1: Vec2, sa0: f64, b0: Vec2, b1: Vec2, sb0: f64) -> PathCrossing {
    let ab = a1 - a0;
    let la = ab.norm();
    let bb = b1 - b0;
    let lb = bb.norm();
    let proj = |p: Vec2| ((p - a0).dot(ab) / (la * la)).clamp(0.0, 1.0);
    let on_b = |p: Vec2| crate::geometry::point_segment_distance(p, b0, b1) <= 1e-9;
    let mut t = if on_b(a0) { 0.0 } else { proj(b0).min(proj(b1)) };
    if !on_b(a0 + ab * t) {
        t = proj(b0).max(proj(b1));
    }
    let p = a0 + ab * t;
    let u = if lb > 0.0 { ((p - b0).dot(bb) / (lb * lb)).clamp(0.0, 1.0) } else { 0.0 };
    PathCrossing { point: p, s_a: sa0 + t * la, s_b: sb0 + u * lb }
}

/// Point on segment `p0-p1` closest to segment `q0-q1`, with its arclength.
fn nearest_on(p0: Vec2, p1: Vec2, s0: f64, q0: Vec2, q1: Vec2) -> (f64, Vec2) {
    let d = p1 - p0;
    let len = d.norm();
    let mut best = (f64::INFINITY, 0.0);
    // The closest pair of two non-intersecting segments always involves an endpoint.
    for cand in [q0, q1] {
        let t = ((cand - p0).dot(d) / (len * len)).clamp(0.0, 1.0);
        let dist = (p0 + d * t).distance(cand);
        if dist < best.0 {
            best = (dist, t);
        }
    }
    for (t, p) in [(0.0, p0), (1.0, p1)] {
        let dist = crate::geometry::point_segment_distance(p, q0, q1);
        if dist < best.0 {
            best = (dist, t);
        }
    }
    (s0 + best.1 * len, p0 + d * best.1)
}

/// Per-vehicle input to arrival synchronization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalLeg {
    /// Distance from the nominal start to the conflict point.
    pub distance: f64,
    pub speed: f64,
    /// How far the start may move backward before leaving the map.
    pub room: f64,
}

/// Start-position shifts `(shift_a, shift_b)` so both vehicles reach the
/// conflict point at the same time. The later arriver stays put and the
/// earlier one is moved back along its path.
pub fn sync_arrival(a: ArrivalLeg, b: ArrivalLeg) -> Result<(f64, f64), ScenarioError> {
    for leg in [a, b] {
        if !(leg.speed > 0.0 && leg.speed.is_finite()) {
            return Err(ScenarioError::InvalidSpeed(leg.speed));
        }
        if !(leg.distance >= 0.0 && leg.distance.is_finite()) {
            return Err(ScenarioError::InvalidTrajectory("arrival distance must be non-negative".into()));
        }
    }
    let ta = a.distance / a.speed;
    let tb = b.distance / b.speed;
    let (shift_a, shift_b) = if ta >= tb {
        (0.0, b.speed * ta - b.distance)
    } else {
        (a.speed * tb - a.distance, 0.0)
    };
    if shift_a > a.room + 1e-9 || shift_b > b.room + 1e-9 {
        return Err(ScenarioError::OffMap { shift: shift_a.max(shift_b) });
    }
    Ok((shift_a, shift_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(x0: f64, y0: f64, x1: f64, y1: f64) -> Trajectory {
        Trajectory::from_points(&[Vec2::new(x0, y0), Vec2::new(x1, y1)], 10.0).unwrap()
    }

    fn leg(distance: f64, speed: f64) -> ArrivalLeg {
        ArrivalLeg { distance, speed, room: 1e3 }
    }

    #[test]
    fn spacing_and_arclength() {
        let t = line(0.0, 0.0, 0.0, 9.0);
        assert!(t.waypoints().windows(2).all(|w| w[1].s > w[0].s && w[1].s - w[0].s <= MAX_WAYPOINT_SPACING));
        assert!((t.length() - 9.0).abs() < 1e-12);
        assert_eq!(t.point_at(4.5), Vec2::new(0.0, 4.5));
    }

    #[test]
    fn perpendicular_crossing() {
        let a = line(-20.0, 0.0, 20.0, 0.0);
        let b = line(0.0, -15.0, 0.0, 15.0);
        let c = trajectory_intersection(&a, &b).unwrap();
        assert!(c.point.norm() < 1e-12);
        assert!((c.s_a - 20.0).abs() < 1e-9 && (c.s_b - 15.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_lanes_do_not_cross() {
        let a = line(-20.0, 0.0, 20.0, 0.0);
        let b = line(-20.0, 3.5, 20.0, 3.5);
        assert!(trajectory_intersection(&a, &b).is_none());
    }

    #[test]
    fn near_miss_within_half_meter() {
        let a = line(-20.0, 0.0, 20.0, 0.0);
        let b = line(0.0, 0.3, 0.0, 15.0);
        let c = trajectory_intersection(&a, &b).unwrap();
        assert!((c.s_a - 20.0).abs() < 1e-9 && c.s_b.abs() < 1e-9);
    }

    #[test]
    fn sync_examples() {
        assert_eq!(sync_arrival(leg(40.0, 10.0), leg(45.0, 15.0)).unwrap(), (0.0, 15.0));
        assert_eq!(sync_arrival(leg(30.0, 10.0), leg(60.0, 20.0)).unwrap(), (0.0, 0.0));
        assert_eq!(sync_arrival(leg(20.0, 10.0), leg(80.0, 10.0)).unwrap(), (60.0, 0.0));
    }

    #[test]
    fn sync_errors() {
        assert!(matches!(sync_arrival(leg(20.0, 0.0), leg(80.0, 10.0)), Err(ScenarioError::InvalidSpeed(_))));
        let tight = ArrivalLeg { distance: 20.0, speed: 10.0, room: 10.0 };
        assert!(matches!(sync_arrival(tight, leg(80.0, 10.0)), Err(ScenarioError::OffMap { .. })));
    }

    #[test]
    fn projection() {
        let t = line(0.0, 0.0, 10.0, 0.0);
        let (s, lat) = t.project(Vec2::new(3.0, 1.0));
        assert!((s - 3.0).abs() < 1e-12 && (lat - 1.0).abs() < 1e-12);
    }
}
