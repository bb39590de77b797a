//! Multi-agent perception harness: rig configurations, line-of-sight
//! visibility, pose/latency degradation, BEV warping and fusion, and the
//! ground-truth oracle predictor used to drive evaluation.

mod degrade;
mod oracle;
mod visibility;
mod warp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;
use crate::scenario::V2xSlots;
use crate::sim::ScenarioLog;

pub use degrade::{apply_latency, degrade_pose, degrade_pose_with, latency_offset, Degradation, DEFAULT_NOISE_STD};
pub use oracle::{fused_oracle_predict, prepare_rigs, rig_coverage, RigSetup, Window};
pub use visibility::{
    classify_sample_visibility, compute_visibility, segment_hits_box, SampleVisibility, VisibilityMask, VIEW_RANGE,
};
pub use warp::{content_masks, fuse_average, warp_to_ego};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum V2xError {
    #[error("unknown configuration {0:?}")]
    UnknownConfig(String),
    #[error("fields do not share one grid and step count")]
    GridMismatch,
    #[error("{0} masks for {1} fields")]
    MaskCount(usize, usize),
    #[error(transparent)]
    Bev(#[from] crate::bev::BevError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RigRole {
    Ego,
    Behind,
    OtherVehicle,
    OtherFollower,
    Infrastructure,
}

impl RigRole {
    fn index(self) -> u64 {
        self as u64
    }
}

/// A perception source. Vehicle rigs ride on a logged agent; the
/// infrastructure rig sits on the static pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRig {
    pub role: RigRole,
    pub agent_id: Option<u32>,
    pub range: f64,
}

impl AgentRig {
    pub fn vehicle(role: RigRole, id: u32) -> Self {
        Self { role, agent_id: Some(id), range: VIEW_RANGE }
    }

    pub fn infrastructure() -> Self {
        Self { role: RigRole::Infrastructure, agent_id: None, range: VIEW_RANGE }
    }

    pub fn is_ego(&self) -> bool {
        self.role == RigRole::Ego
    }

    /// Sensor pose at log frame `k`, or `None` if the agent is absent.
    pub fn pose_at(&self, log: &ScenarioLog, k: usize) -> Option<Pose2> {
        match self.agent_id {
            Some(id) => log.frames.get(k)?.agent(id).map(|a| a.pose()),
            None => Some(log.infrastructure.pose),
        }
    }
}

/// Named rig combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum V2xConfig {
    #[serde(rename = "single")]
    Single,
    #[serde(rename = "ego+behind")]
    EgoBehind,
    #[serde(rename = "ego+other")]
    EgoOther,
    #[serde(rename = "ego+infra")]
    EgoInfra,
    #[serde(rename = "ego+behind+other")]
    EgoBehindOther,
    #[serde(rename = "4vehicles")]
    FourVehicles,
    #[serde(rename = "4vehicles+infra")]
    FourVehiclesInfra,
}

impl V2xConfig {
    pub const ALL: [V2xConfig; 7] = [
        V2xConfig::Single,
        V2xConfig::EgoBehind,
        V2xConfig::EgoOther,
        V2xConfig::EgoInfra,
        V2xConfig::EgoBehindOther,
        V2xConfig::FourVehicles,
        V2xConfig::FourVehiclesInfra,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            V2xConfig::Single => "single",
            V2xConfig::EgoBehind => "ego+behind",
            V2xConfig::EgoOther => "ego+other",
            V2xConfig::EgoInfra => "ego+infra",
            V2xConfig::EgoBehindOther => "ego+behind+other",
            V2xConfig::FourVehicles => "4vehicles",
            V2xConfig::FourVehiclesInfra => "4vehicles+infra",
        }
    }

    pub fn roles(self) -> &'static [RigRole] {
        use RigRole::*;
        match self {
            V2xConfig::Single => &[Ego],
            V2xConfig::EgoBehind => &[Ego, Behind],
            V2xConfig::EgoOther => &[Ego, OtherVehicle],
            V2xConfig::EgoInfra => &[Ego, Infrastructure],
            V2xConfig::EgoBehindOther => &[Ego, Behind, OtherVehicle],
            V2xConfig::FourVehicles => &[Ego, Behind, OtherVehicle, OtherFollower],
            V2xConfig::FourVehiclesInfra => &[Ego, Behind, OtherVehicle, OtherFollower, Infrastructure],
        }
    }

    /// Rigs of this configuration for a scenario; slots the scenario does
    /// not fill are skipped. The ego rig always comes first.
    pub fn rigs(self, slots: &V2xSlots) -> Vec<AgentRig> {
        self.roles()
            .iter()
            .filter_map(|&role| match role {
                RigRole::Ego => Some(AgentRig::vehicle(role, slots.ego)),
                RigRole::Behind => slots.behind.map(|id| AgentRig::vehicle(role, id)),
                RigRole::OtherVehicle => slots.other.map(|id| AgentRig::vehicle(role, id)),
                RigRole::OtherFollower => slots.other_follower.map(|id| AgentRig::vehicle(role, id)),
                RigRole::Infrastructure => Some(AgentRig::infrastructure()),
            })
            .collect()
    }
}

impl fmt::Display for V2xConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for V2xConfig {
    type Err = V2xError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        V2xConfig::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| V2xError::UnknownConfig(s.to_string()))
    }
}
