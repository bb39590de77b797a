//! Procedural junction maps, planned paths, arrival-synchronized spawning, and dataset splits.

pub mod map;
mod spawn;
mod split;
mod trajectory;
mod types;

pub use map::{build_map, plan_trajectory, Arm, Axis, InfraSite, IntersectionMap, LightProgram, LightState, Maneuver, Route};
pub use spawn::{
    spawn_scenario, AgentSpec, ConflictInfo, SpawnPlan, V2xSlots, ACCIDENT_SPEED, ARRIVAL_TIME, FOLLOWER_GAP,
    MAX_SPAWN_ATTEMPTS,
};
pub use split::{split_dataset, split_sizes, Split, SplitResult, DEFAULT_RATIOS};
pub use trajectory::{sync_arrival, trajectory_intersection, ArrivalLeg, PathCrossing, Trajectory, Waypoint};
pub use types::{AgentClass, ConflictKind, Role, ScenarioConfig, ScenarioType, Topology, DURATION_CAP_S};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario type {0:?}")]
    UnknownType(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("maneuver {maneuver:?} from {approach:?} does not exist on this junction")]
    InvalidManeuver { approach: Arm, maneuver: Maneuver },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("speed must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("start shift of {shift:.2} m would leave the map")]
    OffMap { shift: f64 },
    #[error("initial agent boxes overlap")]
    Overlap,
    #[error("scenario {scenario} cannot be staged on a {topology:?} junction")]
    TopologyMismatch { scenario: ScenarioType, topology: Topology },
    #[error("spawn failed after {attempts} attempts: {reason}")]
    SpawnFailed { attempts: u32, reason: String },
}

/// Map, plan, and config for one scenario; the map is derived from the seed.
pub fn build_scenario(config: &ScenarioConfig) -> Result<(IntersectionMap, SpawnPlan), ScenarioError> {
    let (topology, signalized) = scenario_layout(config);
    let map = build_map(topology, signalized, config.seed);
    let plan = spawn_scenario(config, &map)?;
    Ok((map, plan))
}

/// Topology and signal presence implied by a config; normal scenarios draw both from the seed.
pub fn scenario_layout(config: &ScenarioConfig) -> (Topology, bool) {
    use rand::Rng;
    match (config.scenario_type.topology(), config.scenario_type.signalized()) {
        (Some(t), Some(s)) => (t, s),
        _ => {
            let mut r = crate::rng::stream(config.seed, "layout", 0);
            let t = if r.random_bool(0.5) { Topology::FourWay } else { Topology::ThreeWay };
            (t, r.random_bool(0.5))
        }
    }
}
