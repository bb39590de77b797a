use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::scenario::{ScenarioConfig, ScenarioType, Split};
use crate::sim::Termination;

pub const MANIFEST_FORMAT: &str = "crashcast-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub scenario_type: ScenarioType,
    pub seed: u64,
    pub split: Split,
    /// Log path relative to the dataset root.
    pub path: String,
    pub termination: Termination,
    pub collision_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DatasetManifest {
    pub fn new(seed: u64, ratios: [f64; 3], entries: Vec<ManifestEntry>) -> Self {
        Self { format: MANIFEST_FORMAT.to_string(), seed, ratios, entries, warnings: Vec::new() }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn counts(&self) -> [usize; 3] {
        Split::ALL.map(|s| self.split(s).count())
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.format != MANIFEST_FORMAT {
            return Err(IoError::Format(format!("unsupported manifest format {:?}", self.format)));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(IoError::Format(format!("duplicate scenario id {:?}", e.id)));
            }
            let p = Path::new(&e.path);
            if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(IoError::Format(format!("entry {:?} has a path outside the dataset", e.id)));
            }
        }
        if self.ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(IoError::Format("invalid split ratios".into()));
        }
        Ok(())
    }

    /// Checks that every listed log exists under `root`.
    pub fn check_paths(&self, root: &Path) -> Result<(), IoError> {
        for e in &self.entries {
            if !root.join(&e.path).is_file() {
                return Err(IoError::Format(format!("missing log {}", e.path)));
            }
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest, IoError> {
    let m: DatasetManifest = serde_json::from_str(text)?;
    m.validate()?;
    Ok(m)
}

/// Parses and validates a scenario configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, IoError> {
    let c: ScenarioConfig = serde_json::from_str(text)?;
    c.validate().map_err(|e| IoError::Format(e.to_string()))?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            scenario_type: ScenarioType::Accident(2),
            seed: 4,
            split: Split::Val,
            path: format!("logs/{id}.jsonl"),
            termination: Termination::Collision,
            collision_time: Some(6.3),
        }
    }

    #[test]
    fn manifest_roundtrip_and_checks() {
        let m = DatasetManifest::new(1, [0.7, 0.15, 0.15], vec![entry("a"), entry("b")]);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(parse_manifest(&text).unwrap(), m);
        assert_eq!(m.counts(), [0, 2, 0]);
        let dup = DatasetManifest::new(1, [0.7, 0.15, 0.15], vec![entry("a"), entry("a")]);
        assert!(parse_manifest(&serde_json::to_string(&dup).unwrap()).is_err());
        let mut escape = entry("c");
        escape.path = "../x.jsonl".into();
        let m = DatasetManifest::new(1, [0.7, 0.15, 0.15], vec![escape]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn config_parsing() {
        let c = ScenarioConfig::new(ScenarioType::Accident(7), 3);
        assert_eq!(parse_config(&serde_json::to_string(&c).unwrap()).unwrap(), c);
        assert!(parse_config("{}").is_err());
        let mut bad = c;
        bad.n_pedestrians = 99;
        assert!(parse_config(&serde_json::to_string(&bad).unwrap()).is_err());
    }
}
