use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ScenarioError, Topology, Trajectory};
use crate::geometry::{Polygon, Pose2, Vec2};
use crate::rng;

pub const LANE_WIDTH: f64 = 3.5;
pub const ARM_LENGTH: f64 = 120.0;
/// Lateral offset of sidewalk centerlines from the road axis.
pub const SIDEWALK_OFFSET: f64 = 5.5;
const ARC_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    North,
    East,
    South,
    West,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::North, Arm::East, Arm::South, Arm::West];

    /// Counter-clockwise quarter turns mapping the south arm onto this arm.
    pub fn quarter_turns(self) -> u8 {
        match self {
            Arm::South => 0,
            Arm::East => 1,
            Arm::North => 2,
            Arm::West => 3,
        }
    }

    pub fn from_quarter_turns(k: u8) -> Arm {
        match k % 4 {
            0 => Arm::South,
            1 => Arm::East,
            2 => Arm::North,
            _ => Arm::West,
        }
    }

    pub fn rotated(self, k: u8) -> Arm {
        Arm::from_quarter_turns(self.quarter_turns() + k)
    }

    /// Unit vector from the junction center out along this arm.
    pub fn outward(self) -> Vec2 {
        rotate_quarter(Vec2::new(0.0, -1.0), self.quarter_turns())
    }

    pub fn axis(self) -> Axis {
        match self {
            Arm::North | Arm::South => Axis::NorthSouth,
            Arm::East | Arm::West => Axis::EastWest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maneuver {
    Straight,
    Left,
    Right,
}

impl Maneuver {
    pub const ALL: [Maneuver; 3] = [Maneuver::Straight, Maneuver::Left, Maneuver::Right];

    pub fn exit_arm(self, approach: Arm) -> Arm {
        // From the south: straight exits north, left exits west, right exits east.
        let k = match self {
            Maneuver::Straight => 2,
            Maneuver::Left => 3,
            Maneuver::Right => 1,
        };
        approach.rotated(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    NorthSouth,
    EastWest,
}

/// Exact rotation by `k` counter-clockwise quarter turns.
pub fn rotate_quarter(p: Vec2, k: u8) -> Vec2 {
    match k % 4 {
        0 => p,
        1 => Vec2::new(-p.y, p.x),
        2 => Vec2::new(-p.x, -p.y),
        _ => Vec2::new(p.y, -p.x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LightState {
    Green,
    Yellow,
    Red,
}

/// Two-phase fixed-time program. Each axis runs green, yellow, then red while
/// the crossing axis has green and yellow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightProgram {
    pub green: f64,
    pub yellow: f64,
    /// Seconds added to scenario time before evaluating the cycle.
    pub offset: f64,
}

impl LightProgram {
    pub fn cycle(&self) -> f64 {
        2.0 * (self.green + self.yellow)
    }

    pub fn red(&self) -> f64 {
        self.green + self.yellow
    }

    pub fn state(&self, axis: Axis, t: f64) -> LightState {
        let half = self.green + self.yellow;
        let mut u = (t + self.offset).rem_euclid(self.cycle());
        if axis == Axis::EastWest {
            u = (u + half).rem_euclid(self.cycle());
        }
        if u < self.green {
            LightState::Green
        } else if u < half {
            LightState::Yellow
        } else {
            LightState::Red
        }
    }
}

/// One approach-to-exit path through the junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub approach: Arm,
    pub maneuver: Maneuver,
    pub exit: Arm,
    pub trajectory: Trajectory,
    /// Arclength of the stop line.
    pub stop_s: f64,
    /// Arclength where the path leaves the junction box.
    pub exit_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfraSite {
    pub pose: Pose2,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionMap {
    pub topology: Topology,
    pub signalized: bool,
    pub seed: u64,
    /// Half side of the square junction box, meters.
    pub junction_half: f64,
    pub arm_length: f64,
    pub lane_width: f64,
    pub routes: Vec<Route>,
    pub buildings: Vec<Polygon>,
    pub light_program: Option<LightProgram>,
    pub infrastructure: InfraSite,
}

impl IntersectionMap {
    pub fn arms(&self) -> &'static [Arm] {
        arms_of(self.topology)
    }

    pub fn route(&self, approach: Arm, maneuver: Maneuver) -> Option<&Route> {
        self.routes.iter().find(|r| r.approach == approach && r.maneuver == maneuver)
    }

    pub fn in_junction(&self, p: Vec2) -> bool {
        p.x.abs() <= self.junction_half && p.y.abs() <= self.junction_half
    }

    /// SHA-256 over the canonical JSON encoding, hex.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("map serializes");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn arms_of(topology: Topology) -> &'static [Arm] {
    match topology {
        Topology::FourWay => &Arm::ALL,
        Topology::ThreeWay => &[Arm::East, Arm::South, Arm::West],
    }
}

fn arc(center: Vec2, radius: f64, from: f64, to: f64, start: Vec2, end: Vec2) -> Vec<Vec2> {
    let n = ((radius * (to - from).abs()) / ARC_STEP).ceil().max(2.0) as usize;
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(start);
    for i in 1..n {
        let a = from + (to - from) * i as f64 / n as f64;
        pts.push(center + Vec2::from_angle(a) * radius);
    }
    pts.push(end);
    pts
}

/// Centerline for the south approach; other approaches are exact quarter-turn images.
fn canonical_points(maneuver: Maneuver, j: f64, l: f64) -> (Vec<Vec2>, f64) {
    let h = 0.5 * LANE_WIDTH;
    let entry = Vec2::new(h, -j);
    let mut pts = vec![Vec2::new(h, -l), entry];
    let inside = match maneuver {
        Maneuver::Straight => {
            pts.push(Vec2::new(h, j));
            pts.push(Vec2::new(h, l));
            2.0 * j
        }
        Maneuver::Right => {
            let r = j - h;
            let exit = Vec2::new(j, -h);
            pts.extend(arc(Vec2::new(j, -j), r, PI, FRAC_PI_2, entry, exit).into_iter().skip(1));
            pts.push(Vec2::new(l, -h));
            r * FRAC_PI_2
        }
        Maneuver::Left => {
            let r = j + h;
            let exit = Vec2::new(-j, h);
            pts.extend(arc(Vec2::new(-j, -j), r, 0.0, FRAC_PI_2, entry, exit).into_iter().skip(1));
            pts.push(Vec2::new(-l, h));
            r * FRAC_PI_2
        }
    };
    (pts, inside)
}

/// Plans the centerline for `maneuver` from `approach` on `map`'s geometry.
pub fn plan_trajectory(map: &IntersectionMap, approach: Arm, maneuver: Maneuver) -> Result<Trajectory, ScenarioError> {
    plan_route(map.topology, map.junction_half, map.arm_length, approach, maneuver).map(|r| r.trajectory)
}

fn plan_route(topology: Topology, j: f64, l: f64, approach: Arm, maneuver: Maneuver) -> Result<Route, ScenarioError> {
    let arms = arms_of(topology);
    let exit = maneuver.exit_arm(approach);
    if !arms.contains(&approach) || !arms.contains(&exit) {
        return Err(ScenarioError::InvalidManeuver { approach, maneuver });
    }
    let (pts, inside) = canonical_points(maneuver, j, l);
    let k = approach.quarter_turns();
    let pts: Vec<Vec2> = pts.into_iter().map(|p| rotate_quarter(p, k)).collect();
    let trajectory = Trajectory::from_points(&pts, 10.0)?;
    let stop_s = l - j;
    Ok(Route { approach, maneuver, exit, trajectory, stop_s, exit_s: stop_s + inside })
}

fn route_clearance(routes: &[Route], poly: &Polygon) -> f64 {
    let mut best = f64::INFINITY;
    for r in routes {
        for w in r.trajectory.waypoints() {
            let p = w.position();
            if poly.contains(p) {
                return 0.0;
            }
            for (a, b) in poly.edges() {
                best = best.min(crate::geometry::point_segment_distance(p, a, b));
            }
        }
    }
    best
}

const QUADRANTS: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

/// Builds a seeded parametric junction: straight arms, circular-arc turns,
/// corner buildings, one infrastructure pole, optional light program.
pub fn build_map(topology: Topology, signalized: bool, seed: u64) -> IntersectionMap {
    let mut rng = rng::stream(seed, "map", 0);
    let j: f64 = rng.random_range(7.5..=9.0);
    let l = ARM_LENGTH;
    let mut routes = Vec::new();
    for &approach in arms_of(topology) {
        for maneuver in Maneuver::ALL {
            if let Ok(r) = plan_route(topology, j, l, approach, maneuver) {
                routes.push(r);
            }
        }
    }

    let n_buildings = rng.random_range(0..=4usize);
    let mut quads: Vec<usize> = (0..4).collect();
    for i in (1..quads.len()).rev() {
        let k = rng.random_range(0..=i);
        quads.swap(i, k);
    }
    let mut chosen = quads[..n_buildings].to_vec();
    chosen.sort_unstable();
    let mut buildings = Vec::new();
    for q in chosen {
        let (sx, sy) = QUADRANTS[q];
        let w: f64 = rng.random_range(15.0..=40.0);
        let h: f64 = rng.random_range(15.0..=40.0);
        let mut setback: f64 = rng.random_range(2.5..=5.0);
        // Grow the setback until the footprint clears every lane by a lane half-width.
        loop {
            let c = 0.5 * LANE_WIDTH + 0.5 * LANE_WIDTH + setback;
            let xs = [sx * c, sx * (c + w)];
            let ys = [sy * c, sy * (c + h)];
            let poly = Polygon::rect(xs[0].min(xs[1]), ys[0].min(ys[1]), xs[0].max(xs[1]), ys[0].max(ys[1]))
                .expect("positive extents");
            if route_clearance(&routes, &poly) >= 0.5 * LANE_WIDTH + 0.5 {
                buildings.push(poly);
                break;
            }
            setback += 0.5;
        }
    }

    let light_program = signalized.then(|| LightProgram { green: 10.0, yellow: 3.0, offset: rng.random_range(0.0..26.0) });

    let (sx, sy) = QUADRANTS[rng.random_range(0..4usize)];
    let p = j - (j - 4.5) / SQRT_2;
    let pos = Vec2::new(sx * p, sy * p);
    let height = rng.random_range(3.0..=5.0);
    let infrastructure = InfraSite { pose: Pose2::from_parts(pos, (-pos).angle()), height };

    IntersectionMap {
        topology,
        signalized,
        seed,
        junction_half: j,
        arm_length: l,
        lane_width: LANE_WIDTH,
        routes,
        buildings,
        light_program,
        infrastructure,
    }
}
