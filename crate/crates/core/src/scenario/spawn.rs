use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::{Arm, Axis, InfraSite, IntersectionMap, Maneuver, Route, SIDEWALK_OFFSET};
use super::{
    sync_arrival, trajectory_intersection, AgentClass, ArrivalLeg, ConflictKind, Role, ScenarioConfig, ScenarioError,
    ScenarioType, Trajectory,
};
use crate::geometry::{obb_overlap, OrientedBox, Pose2, Vec2};
use crate::rng;

pub const MAX_SPAWN_ATTEMPTS: u32 = 100;
pub const FOLLOWER_GAP: (f64, f64) = (8.0, 15.0);
pub const ACCIDENT_SPEED: (f64, f64) = (7.0, 13.0);
pub const ARRIVAL_TIME: (f64, f64) = (4.5, 8.5);
const BACKGROUND_SPEED: (f64, f64) = (5.0, 11.0);
const PEDESTRIAN_SPEED: (f64, f64) = (1.2, 1.8);

/// Everything the simulator needs to know about one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: u32,
    pub class: AgentClass,
    pub role: Role,
    pub length: f64,
    pub width: f64,
    pub trajectory: Trajectory,
    pub start_s: f64,
    /// Arclength at which the agent has completed its plan.
    pub end_s: f64,
    pub initial_speed: f64,
    pub max_speed: f64,
    pub initial_pose: Pose2,
    /// Stop line arclength and signal axis for vehicles that use a junction route.
    #[serde(default)]
    pub stop_s: Option<f64>,
    #[serde(default)]
    pub axis: Option<Axis>,
}

impl AgentSpec {
    pub fn initial_box(&self) -> OrientedBox {
        OrientedBox { center: self.initial_pose, length: self.length, width: self.width }
    }
}

/// Agent ids filling each multi-agent perception slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct V2xSlots {
    pub ego: u32,
    pub behind: Option<u32>,
    pub other: Option<u32>,
    pub other_follower: Option<u32>,
}

/// Designed conflict of an accident scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictInfo {
    pub point: Vec2,
    /// Distance each accident vehicle travels from its start to the conflict point.
    pub distance: [f64; 2],
    pub speed: [f64; 2],
}

impl ConflictInfo {
    pub fn arrival_times(&self) -> [f64; 2] {
        [self.distance[0] / self.speed[0], self.distance[1] / self.speed[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnPlan {
    pub scenario_type: ScenarioType,
    pub agents: Vec<AgentSpec>,
    pub infrastructure: InfraSite,
    pub v2x: V2xSlots,
    pub conflict: Option<ConflictInfo>,
}

impl SpawnPlan {
    pub fn agent(&self, id: u32) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn by_role(&self, role: Role) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.role == role)
    }
}

/// Canonical `(approach, maneuver)` pairs of the two conflicting vehicles.
fn conflict_routes(kind: ConflictKind) -> [(Arm, Maneuver); 2] {
    use Arm::*;
    use Maneuver::*;
    match kind {
        ConflictKind::StraightCrossing => [(South, Straight), (West, Straight)],
        ConflictKind::LeftVsCrossing => [(South, Left), (West, Straight)],
        ConflictKind::LeftVsOncoming => [(South, Left), (North, Straight)],
        ConflictKind::RightVsOncomingLeft => [(South, Right), (North, Left)],
        ConflictKind::MergeIntoStem => [(West, Right), (East, Left)],
        ConflictKind::StraightVsStemRight => [(West, Straight), (South, Right)],
    }
}

fn sample_class(rng: &mut ChaCha8Rng) -> AgentClass {
    let u: f64 = rng.random();
    match u {
        u if u < 0.62 => AgentClass::Car,
        u if u < 0.77 => AgentClass::Van,
        u if u < 0.86 => AgentClass::Truck,
        u if u < 0.95 => AgentClass::Motorcycle,
        _ => AgentClass::Cyclist,
    }
}

fn sample_dims(rng: &mut ChaCha8Rng, class: AgentClass) -> (f64, f64) {
    let (l, w) = class.nominal_dims();
    let l = l * rng.random_range(0.95..=1.05);
    let w = w * rng.random_range(0.95..=1.05);
    (l.max(w), w)
}

struct Builder<'a> {
    map: &'a IntersectionMap,
    agents: Vec<AgentSpec>,
}

impl Builder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn vehicle(
        &mut self,
        id: u32,
        class: AgentClass,
        dims: (f64, f64),
        role: Role,
        route: &Route,
        start_s: f64,
        end_s: f64,
        speed: f64,
    ) -> AgentSpec {
        let trajectory = route.trajectory.clone().with_speed(speed);
        let p = trajectory.point_at(start_s);
        let yaw = trajectory.heading_at(start_s);
        AgentSpec {
            id,
            class,
            role,
            length: dims.0,
            width: dims.1,
            trajectory,
            start_s,
            end_s,
            initial_speed: speed,
            max_speed: speed,
            initial_pose: Pose2::from_parts(p, yaw),
            stop_s: Some(route.stop_s),
            axis: Some(route.approach.axis()),
        }
    }

    /// True if `spec` keeps at least `clearance` meters (in box inflation) from everyone placed so far.
    fn fits(&self, spec: &AgentSpec, clearance: f64) -> bool {
        let mut b = spec.initial_box();
        b.length += 2.0 * clearance;
        b.width += 2.0 * clearance;
        self.agents.iter().all(|a| !obb_overlap(&b, &a.initial_box()))
    }

    fn push(&mut self, spec: AgentSpec) {
        self.agents.push(spec);
    }
}

/// Samples a complete, overlap-free spawn plan. Resamples up to
/// [`MAX_SPAWN_ATTEMPTS`] times before giving up.
pub fn spawn_scenario(config: &ScenarioConfig, map: &IntersectionMap) -> Result<SpawnPlan, ScenarioError> {
    config.validate()?;
    if let Some(top) = config.scenario_type.topology() {
        if top != map.topology {
            return Err(ScenarioError::TopologyMismatch { scenario: config.scenario_type, topology: map.topology });
        }
    }
    let mut last_err = None;
    for attempt in 0..MAX_SPAWN_ATTEMPTS {
        let mut rng = rng::stream(config.seed, "spawn", u64::from(attempt));
        let res = match config.scenario_type.conflict() {
            Some(kind) => try_accident(config, map, kind, &mut rng),
            None => try_normal(config, map, &mut rng),
        };
        match res {
            Ok(plan) => return Ok(plan),
            Err(e) => last_err = Some(e),
        }
    }
    Err(ScenarioError::SpawnFailed {
        attempts: MAX_SPAWN_ATTEMPTS,
        reason: last_err.map(|e| e.to_string()).unwrap_or_default(),
    })
}

fn try_accident(
    config: &ScenarioConfig,
    map: &IntersectionMap,
    kind: ConflictKind,
    rng: &mut ChaCha8Rng,
) -> Result<SpawnPlan, ScenarioError> {
    let turns = match map.topology {
        super::Topology::FourWay => rng.random_range(0..4u8),
        super::Topology::ThreeWay => 0,
    };
    let mut legs = conflict_routes(kind).map(|(a, m)| (a.rotated(turns), m));
    if rng.random_bool(0.5) {
        legs.swap(0, 1);
    }
    let routes: Vec<&Route> = legs
        .iter()
        .map(|&(a, m)| map.route(a, m).ok_or(ScenarioError::InvalidManeuver { approach: a, maneuver: m }))
        .collect::<Result<_, _>>()?;

    let speeds = match config.max_speeds {
        Some(v) => v,
        None => [rng.random_range(ACCIDENT_SPEED.0..=ACCIDENT_SPEED.1), rng.random_range(ACCIDENT_SPEED.0..=ACCIDENT_SPEED.1)],
    };
    let crossing = trajectory_intersection(&routes[0].trajectory, &routes[1].trajectory)
        .ok_or_else(|| ScenarioError::InvalidTrajectory("accident paths never meet".into()))?;
    let s_conf = [crossing.s_a, crossing.s_b];

    // Place the later arriver at v·T from the conflict point and the earlier one
    // somewhat closer, then let arrival synchronization move it back.
    let t_arrive: f64 = rng.random_range(ARRIVAL_TIME.0..=ARRIVAL_TIME.1);
    let later = usize::from(rng.random_bool(0.5));
    let earlier = 1 - later;
    let mut dist = [0.0; 2];
    dist[later] = speeds[later] * t_arrive;
    dist[earlier] = speeds[earlier] * t_arrive * rng.random_range(0.5..=1.0);
    let gaps = [rng.random_range(FOLLOWER_GAP.0..=FOLLOWER_GAP.1), rng.random_range(FOLLOWER_GAP.0..=FOLLOWER_GAP.1)];
    let leg = |i: usize| ArrivalLeg { distance: dist[i], speed: speeds[i], room: s_conf[i] - dist[i] - gaps[i] };
    let (shift0, shift1) = sync_arrival(leg(0), leg(1))?;
    dist[0] += shift0;
    dist[1] += shift1;
    let start = [s_conf[0] - dist[0], s_conf[1] - dist[1]];
    for i in 0..2 {
        if start[i] - gaps[i] < 0.0 {
            return Err(ScenarioError::OffMap { shift: gaps[i] - start[i] });
        }
    }

    let mut b = Builder { map, agents: Vec::new() };
    let classes = [sample_class(rng), sample_class(rng)];
    let dims = [sample_dims(rng, classes[0]), sample_dims(rng, classes[1])];
    let roles = [Role::Accident1, Role::Accident2];
    for i in 0..2 {
        let len = routes[i].trajectory.length();
        let spec = b.vehicle(i as u32 + 1, classes[i], dims[i], roles[i], routes[i], start[i], len, speeds[i]);
        if !b.fits(&spec, 0.5) {
            return Err(ScenarioError::Overlap);
        }
        b.push(spec);
    }
    let f_roles = [Role::Follower1, Role::Follower2];
    for i in 0..2 {
        let class = sample_class(rng);
        let d = sample_dims(rng, class);
        let len = routes[i].trajectory.length();
        let spec = b.vehicle(i as u32 + 3, class, d, f_roles[i], routes[i], start[i] - gaps[i], len, speeds[i]);
        if !b.fits(&spec, 0.2) {
            return Err(ScenarioError::Overlap);
        }
        b.push(spec);
    }

    let used: Vec<Arm> = legs.iter().map(|l| l.0).collect();
    add_background(&mut b, config, rng, &used, 5)?;
    let next = 5 + config.n_background_vehicles as u32;
    add_pedestrians(&mut b, config, rng, &used, next)?;

    Ok(SpawnPlan {
        scenario_type: config.scenario_type,
        agents: b.agents,
        infrastructure: map.infrastructure,
        v2x: V2xSlots { ego: 1, behind: Some(3), other: Some(2), other_follower: Some(4) },
        conflict: Some(ConflictInfo { point: crossing.point, distance: dist, speed: speeds }),
    })
}

fn try_normal(config: &ScenarioConfig, map: &IntersectionMap, rng: &mut ChaCha8Rng) -> Result<SpawnPlan, ScenarioError> {
    let arms = map.arms();
    let ego_arm = arms[rng.random_range(0..arms.len())];
    let pick_route = |rng: &mut ChaCha8Rng, arm: Arm| -> &Route {
        let options: Vec<&Route> = map.routes.iter().filter(|r| r.approach == arm).collect();
        options[rng.random_range(0..options.len())]
    };
    let mut b = Builder { map, agents: Vec::new() };

    let ego_route = pick_route(rng, ego_arm);
    let v_ego = rng.random_range(7.0..=11.0);
    let ego_start = ego_route.stop_s - rng.random_range(20.0..=50.0);
    // Short plan: the ego is done a little after leaving the junction.
    let ego_end = (ego_route.exit_s + 10.0).min(ego_route.trajectory.length());
    let class = sample_class(rng);
    let d = sample_dims(rng, class);
    let ego = b.vehicle(1, class, d, Role::Background, ego_route, ego_start, ego_end, v_ego);
    b.push(ego);
    let gap = rng.random_range(FOLLOWER_GAP.0..=FOLLOWER_GAP.1);
    let class = sample_class(rng);
    let d = sample_dims(rng, class);
    let len = ego_route.trajectory.length();
    let behind = b.vehicle(2, class, d, Role::Background, ego_route, ego_start - gap, len, v_ego);
    if !b.fits(&behind, 0.2) {
        return Err(ScenarioError::Overlap);
    }
    b.push(behind);

    let others: Vec<Arm> = arms.iter().copied().filter(|a| *a != ego_arm).collect();
    let other_arm = others[rng.random_range(0..others.len())];
    let other_route = pick_route(rng, other_arm);
    let v_other = rng.random_range(7.0..=11.0);
    let other_start = other_route.stop_s - rng.random_range(20.0..=60.0);
    let len = other_route.trajectory.length();
    let class = sample_class(rng);
    let d = sample_dims(rng, class);
    let other = b.vehicle(3, class, d, Role::Background, other_route, other_start, len, v_other);
    b.push(other);
    let gap = rng.random_range(FOLLOWER_GAP.0..=FOLLOWER_GAP.1);
    let class = sample_class(rng);
    let d = sample_dims(rng, class);
    let of = b.vehicle(4, class, d, Role::Background, other_route, other_start - gap, len, v_other);
    if !b.fits(&of, 0.2) {
        return Err(ScenarioError::Overlap);
    }
    b.push(of);

    let used = [ego_arm, other_arm];
    add_background(&mut b, config, rng, &used, 5)?;
    let next = 5 + config.n_background_vehicles as u32;
    add_pedestrians(&mut b, config, rng, &used, next)?;
    Ok(SpawnPlan {
        scenario_type: config.scenario_type,
        agents: b.agents,
        infrastructure: map.infrastructure,
        v2x: V2xSlots { ego: 1, behind: Some(2), other: Some(3), other_follower: Some(4) },
        conflict: None,
    })
}

fn add_background(
    b: &mut Builder<'_>,
    config: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
    used: &[Arm],
    first_id: u32,
) -> Result<(), ScenarioError> {
    let free: Vec<Arm> = b.map.arms().iter().copied().filter(|a| !used.contains(a)).collect();
    for k in 0..config.n_background_vehicles {
        if free.is_empty() {
            return Err(ScenarioError::InvalidConfig("no free approach for background vehicles".into()));
        }
        let arm = free[rng.random_range(0..free.len())];
        let options: Vec<&Route> = b.map.routes.iter().filter(|r| r.approach == arm).collect();
        let route = options[rng.random_range(0..options.len())];
        let start = route.stop_s - rng.random_range(10.0..=70.0);
        let v = rng.random_range(BACKGROUND_SPEED.0..=BACKGROUND_SPEED.1);
        let class = sample_class(rng);
        let d = sample_dims(rng, class);
        let len = route.trajectory.length();
        let spec = b.vehicle(first_id + k as u32, class, d, Role::Background, route, start, len, v);
        if !b.fits(&spec, 2.0) {
            return Err(ScenarioError::Overlap);
        }
        b.push(spec);
    }
    Ok(())
}

/// Pedestrians walk on sidewalks, each on its own (arm, side) strip. Some cross
/// the road at a mid-block crosswalk on an arm that no scripted vehicle approaches on.
fn add_pedestrians(
    b: &mut Builder<'_>,
    config: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
    used: &[Arm],
    first_id: u32,
) -> Result<(), ScenarioError> {
    let mut slots: Vec<(Arm, f64)> = b.map.arms().iter().flat_map(|&a| [(a, 1.0), (a, -1.0)]).collect();
    for k in 0..config.n_pedestrians {
        if slots.is_empty() {
            return Err(ScenarioError::InvalidConfig("more pedestrians than sidewalk strips".into()));
        }
        let (arm, side) = slots.swap_remove(rng.random_range(0..slots.len()));
        let u = arm.outward();
        let v = u.perp();
        let at = |d: f64, lat: f64| u * d + v * lat;
        let j = b.map.junction_half;
        let crossing = !used.contains(&arm) && rng.random_bool(0.5);
        let points = if crossing {
            let dc = rng.random_range(15.0..=35.0);
            let d0 = dc + rng.random_range(0.0..=6.0);
            vec![at(d0, side * SIDEWALK_OFFSET), at(dc, side * SIDEWALK_OFFSET), at(dc, -side * SIDEWALK_OFFSET)]
        } else {
            let d0 = rng.random_range(j + 3.0..=50.0);
            let d1 = if rng.random_bool(0.5) { d0 + 25.0 } else { (d0 - 25.0).max(j + 1.0) };
            vec![at(d0, side * SIDEWALK_OFFSET), at(d1, side * SIDEWALK_OFFSET)]
        };
        let speed = rng.random_range(PEDESTRIAN_SPEED.0..=PEDESTRIAN_SPEED.1);
        let trajectory = Trajectory::from_points(&points, speed)?;
        let (l, w) = AgentClass::Pedestrian.nominal_dims();
        let spec = AgentSpec {
            id: first_id + k as u32,
            class: AgentClass::Pedestrian,
            role: Role::Pedestrian,
            length: l,
            width: w,
            start_s: 0.0,
            end_s: trajectory.length(),
            initial_speed: speed,
            max_speed: speed,
            initial_pose: Pose2::from_parts(trajectory.start(), trajectory.heading_at(0.0)),
            trajectory,
            stop_s: None,
            axis: None,
        };
        if !b.fits(&spec, 0.5) {
            return Err(ScenarioError::Overlap);
        }
        b.push(spec);
    }
    Ok(())
}
