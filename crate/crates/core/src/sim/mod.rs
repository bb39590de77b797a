//! Fixed-step (10 Hz) kinematic simulation with rule-based controllers and
//! first-contact collision recording.

mod controller;
mod kernel;

use serde::{Deserialize, Serialize};

use crate::geometry::{OrientedBox, Pose2, Vec2};
use crate::scenario::{AgentClass, InfraSite, Role, ScenarioConfig, V2xSlots};

pub use controller::{controller_update, Command, WorldView};
pub use kernel::{detect_collision, run_scenario, step, Simulation};

pub const FRAME_HZ: u32 = 10;
pub const DT: f64 = 0.1;
pub const B_MAX: f64 = 6.0;
pub const A_MAX: f64 = 3.0;
/// Time headway within which a closing leader triggers full braking.
pub const HEADWAY_S: f64 = 1.5;
/// Bumper gap kept to a stopped leader.
pub const STANDSTILL_GAP: f64 = 2.0;

/// Time of frame `k`.
#[inline]
pub fn frame_time(k: usize) -> f64 {
    k as f64 / f64::from(FRAME_HZ)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub class: AgentClass,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
    /// Progress along the agent's planned path, meters.
    pub s: f64,
}

impl AgentState {
    pub fn pose(&self) -> Pose2 {
        Pose2 { x: self.x, y: self.y, yaw: self.yaw }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn obb(&self) -> OrientedBox {
        OrientedBox { center: self.pose(), length: self.length, width: self.width }
    }

    pub fn set_pose(&mut self, p: Pose2) {
        self.x = p.x;
        self.y = p.y;
        self.yaw = p.yaw;
    }
}

/// All agent states at one instant, sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub agents: Vec<AgentState>,
}

impl Frame {
    pub fn agent(&self, id: u32) -> Option<&AgentState> {
        self.agents.binary_search_by_key(&id, |a| a.id).ok().map(|i| &self.agents[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Collision,
    TrajectoryComplete,
    Timeout,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Collision => "collision",
            Termination::TrajectoryComplete => "trajectory-complete",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    /// Ascending agent ids.
    pub ids: [u32; 2],
    pub contact: Vec2,
    pub t: f64,
}

/// Static per-agent facts carried in the log header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub id: u32,
    pub class: AgentClass,
    pub role: Role,
    pub length: f64,
    pub width: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLog {
    pub config: ScenarioConfig,
    pub map_digest: String,
    pub agents: Vec<AgentMeta>,
    pub infrastructure: InfraSite,
    pub v2x: V2xSlots,
    pub frames: Vec<Frame>,
    pub collision: Option<CollisionRecord>,
    pub termination: Termination,
}

impl ScenarioLog {
    pub fn last_frame_index(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn duration(&self) -> f64 {
        frame_time(self.last_frame_index())
    }

    pub fn meta(&self, id: u32) -> Option<&AgentMeta> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn ids_with_role(&self, role: Role) -> Vec<u32> {
        self.agents.iter().filter(|a| a.role == role).map(|a| a.id).collect()
    }

    pub fn accident_ids(&self) -> Vec<u32> {
        self.agents.iter().filter(|a| a.role.is_accident()).map(|a| a.id).collect()
    }
}
