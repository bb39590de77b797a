use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    FourWay,
    ThreeWay,
}

/// The six conflict geometries; each appears at signalized and unsignalized junctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictKind {
    /// Straight vs crossing straight.
    StraightCrossing,
    /// Left turn vs crossing straight from the left.
    LeftVsCrossing,
    /// Left turn vs oncoming straight.
    LeftVsOncoming,
    /// Right turn vs oncoming left turn, both entering the same exit.
    RightVsOncomingLeft,
    /// Three-way: right turn from one side vs left turn from the other, merging into the stem.
    MergeIntoStem,
    /// Three-way: straight through vs right turn out of the stem.
    StraightVsStemRight,
}

impl ConflictKind {
    pub fn topology(self) -> Topology {
        match self {
            ConflictKind::MergeIntoStem | ConflictKind::StraightVsStemRight => Topology::ThreeWay,
            _ => Topology::FourWay,
        }
    }
}

/// Accident types 1..=12 or a normal (no scripted conflict) scenario.
///
/// Types 1-6 take place at signalized junctions, 7-12 repeat the same
/// conflicts at unsignalized ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioType {
    Accident(u8),
    Normal,
}

impl ScenarioType {
    pub fn all_accident() -> impl Iterator<Item = ScenarioType> {
        (1..=12).map(ScenarioType::Accident)
    }

    pub fn accident(n: u8) -> Result<Self, ScenarioError> {
        if (1..=12).contains(&n) {
            Ok(ScenarioType::Accident(n))
        } else {
            Err(ScenarioError::UnknownType(n.to_string()))
        }
    }

    pub fn is_accident(self) -> bool {
        matches!(self, ScenarioType::Accident(_))
    }

    pub fn conflict(self) -> Option<ConflictKind> {
        let ScenarioType::Accident(n) = self else { return None };
        Some(match (n - 1) % 6 {
            0 => ConflictKind::StraightCrossing,
            1 => ConflictKind::LeftVsCrossing,
            2 => ConflictKind::LeftVsOncoming,
            3 => ConflictKind::RightVsOncomingLeft,
            4 => ConflictKind::MergeIntoStem,
            _ => ConflictKind::StraightVsStemRight,
        })
    }

    /// Signalized for types 1-6; `None` for normal scenarios (chosen from the seed).
    pub fn signalized(self) -> Option<bool> {
        match self {
            ScenarioType::Accident(n) => Some(n <= 6),
            ScenarioType::Normal => None,
        }
    }

    pub fn topology(self) -> Option<Topology> {
        self.conflict().map(ConflictKind::topology)
    }
}

impl fmt::Display for ScenarioType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioType::Accident(n) => write!(f, "type-{n:02}"),
            ScenarioType::Normal => f.write_str("normal"),
        }
    }
}

impl FromStr for ScenarioType {
    type Err = ScenarioError;

    /// Accepts `normal`, `3`, `type-3`, `type-03`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if t == "normal" {
            return Ok(ScenarioType::Normal);
        }
        let digits = t.strip_prefix("type-").unwrap_or(&t);
        let n: u8 = digits.parse().map_err(|_| ScenarioError::UnknownType(s.to_string()))?;
        ScenarioType::accident(n).map_err(|_| ScenarioError::UnknownType(s.to_string()))
    }
}

impl Serialize for ScenarioType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScenarioType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentClass {
    Car,
    Van,
    Truck,
    Motorcycle,
    Cyclist,
    Pedestrian,
}

impl AgentClass {
    pub const ALL: [AgentClass; 6] = [
        AgentClass::Car,
        AgentClass::Van,
        AgentClass::Truck,
        AgentClass::Motorcycle,
        AgentClass::Cyclist,
        AgentClass::Pedestrian,
    ];

    pub fn is_pedestrian(self) -> bool {
        self == AgentClass::Pedestrian
    }

    /// Nominal (length, width) in meters.
    pub fn nominal_dims(self) -> (f64, f64) {
        match self {
            AgentClass::Car => (4.5, 1.9),
            AgentClass::Van => (5.2, 2.0),
            AgentClass::Truck => (7.5, 2.5),
            AgentClass::Motorcycle => (2.2, 0.8),
            AgentClass::Cyclist => (1.8, 0.7),
            AgentClass::Pedestrian => (0.6, 0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    #[serde(rename = "accident-1")]
    Accident1,
    #[serde(rename = "accident-2")]
    Accident2,
    #[serde(rename = "follower-1")]
    Follower1,
    #[serde(rename = "follower-2")]
    Follower2,
    Background,
    Pedestrian,
}

impl Role {
    pub fn is_accident(self) -> bool {
        matches!(self, Role::Accident1 | Role::Accident2)
    }

    /// The scripted collision partner, if any.
    pub fn partner(self) -> Option<Role> {
        match self {
            Role::Accident1 => Some(Role::Accident2),
            Role::Accident2 => Some(Role::Accident1),
            _ => None,
        }
    }
}

pub const DURATION_CAP_S: f64 = 10.0;

fn default_duration_cap() -> f64 {
    DURATION_CAP_S
}

fn default_tag() -> String {
    "clear".to_string()
}

fn default_tod() -> String {
    "noon".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario_type: ScenarioType,
    pub seed: u64,
    #[serde(default)]
    pub n_background_vehicles: usize,
    #[serde(default)]
    pub n_pedestrians: usize,
    /// Maximum speeds for the two accident vehicles; sampled from the seed when absent.
    #[serde(default)]
    pub max_speeds: Option<[f64; 2]>,
    #[serde(default = "default_tag")]
    pub weather_tag: String,
    #[serde(default = "default_tod")]
    pub timeofday_tag: String,
    #[serde(default = "default_duration_cap")]
    pub duration_cap: f64,
}

impl ScenarioConfig {
    pub fn new(scenario_type: ScenarioType, seed: u64) -> Self {
        Self {
            scenario_type,
            seed,
            n_background_vehicles: 0,
            n_pedestrians: 0,
            max_speeds: None,
            weather_tag: default_tag(),
            timeofday_tag: default_tod(),
            duration_cap: DURATION_CAP_S,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(v) = self.max_speeds {
            if v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(ScenarioError::InvalidConfig("max_speeds must be positive".into()));
            }
        }
        if self.duration_cap != DURATION_CAP_S {
            return Err(ScenarioError::InvalidConfig(format!("duration_cap must be {DURATION_CAP_S} s")));
        }
        if self.n_background_vehicles > 16 || self.n_pedestrians > 8 {
            return Err(ScenarioError::InvalidConfig("too many background agents (max 16 vehicles, 8 pedestrians)".into()));
        }
        Ok(())
    }
}
