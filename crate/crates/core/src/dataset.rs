//! Seeded batch generation of scenario logs with split assignment.

use rand::Rng;

use std::path::Path;

use crate::io::{load_log, load_manifest, save_log, save_manifest, DatasetManifest, IoError, ManifestEntry};
use crate::rng;
use crate::scenario::{
    build_map, build_scenario, scenario_layout, split_dataset, IntersectionMap, ScenarioConfig, ScenarioError,
    ScenarioType, Split,
};
use crate::sim::{run_scenario, ScenarioLog};

/// Reseeds tried when a scenario cannot be staged.
pub const MAX_RESEEDS: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub scenarios: usize,
    /// Cycled in order; scenario `i` gets `types[i % len]`.
    pub types: Vec<ScenarioType>,
    pub seed: u64,
    pub ratios: [f64; 3],
    /// Inclusive bounds on background population per scenario.
    pub max_background_vehicles: usize,
    pub max_pedestrians: usize,
}

impl GenerateOptions {
    pub fn new(scenarios: usize, types: Vec<ScenarioType>, seed: u64) -> Self {
        Self {
            scenarios,
            types,
            seed,
            ratios: crate::scenario::DEFAULT_RATIOS,
            max_background_vehicles: 4,
            max_pedestrians: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub entry: ManifestEntry,
    pub log: ScenarioLog,
}

pub fn scenario_id(index: usize, ty: ScenarioType) -> String {
    format!("s{index:05}-{ty}")
}

/// Config for scenario `index`, reseeded `attempt` times.
pub fn scenario_config(opts: &GenerateOptions, index: usize, attempt: u64) -> ScenarioConfig {
    let ty = opts.types[index % opts.types.len()];
    let seed = rng::derive_seed(opts.seed, "scenario", (index as u64) << 8 | attempt);
    let mut r = rng::stream(opts.seed, "population", index as u64);
    let mut cfg = ScenarioConfig::new(ty, seed);
    cfg.n_background_vehicles = r.random_range(0..=opts.max_background_vehicles);
    cfg.n_pedestrians = r.random_range(0..=opts.max_pedestrians);
    cfg
}

/// Simulates scenario `index`, reseeding when staging fails.
pub fn generate_one(opts: &GenerateOptions, index: usize) -> Result<ScenarioLog, ScenarioError> {
    let mut last = None;
    for attempt in 0..MAX_RESEEDS {
        let cfg = scenario_config(opts, index, attempt);
        match build_scenario(&cfg) {
            Ok((map, plan)) => return Ok(run_scenario(&plan, &cfg, &map)),
            Err(e) => {
                log::debug!("scenario {index} attempt {attempt}: {e}");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Generates all scenarios and assigns stratified splits.
pub fn generate_dataset(opts: &GenerateOptions) -> Result<(DatasetManifest, Vec<GeneratedScenario>), ScenarioError> {
    if opts.types.is_empty() {
        return Err(ScenarioError::InvalidConfig("no scenario types given".into()));
    }
    let mut out = Vec::with_capacity(opts.scenarios);
    for i in 0..opts.scenarios {
        let log = generate_one(opts, i)?;
        let ty = log.config.scenario_type;
        let id = scenario_id(i, ty);
        let entry = ManifestEntry {
            path: format!("logs/{id}.jsonl"),
            id,
            scenario_type: ty,
            seed: log.config.seed,
            split: Split::Train,
            termination: log.termination,
            collision_time: log.collision.as_ref().map(|c| c.t),
        };
        out.push(GeneratedScenario { entry, log });
    }
    let items: Vec<(String, ScenarioType)> = out.iter().map(|g| (g.entry.id.clone(), g.entry.scenario_type)).collect();
    let split = split_dataset(&items, opts.ratios, opts.seed)?;
    let assign = split.assignment();
    for g in &mut out {
        g.entry.split = assign[&g.entry.id];
    }
    let mut manifest = DatasetManifest::new(opts.seed, opts.ratios, out.iter().map(|g| g.entry.clone()).collect());
    manifest.warnings = split.warnings;
    Ok((manifest, out))
}

/// Writes every log under `root` at its manifest path, then the manifest.
pub fn save_dataset(root: &Path, manifest: &DatasetManifest, scenarios: &[GeneratedScenario]) -> Result<(), IoError> {
    for g in scenarios {
        let path = root.join(&g.entry.path);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        save_log(&g.log, &path)?;
    }
    save_manifest(manifest, root)
}

/// Loads the manifest under `root` and the logs of the chosen split (all
/// when `None`), in manifest order.
pub fn load_dataset(root: &Path, split: Option<Split>) -> Result<Vec<(ManifestEntry, ScenarioLog)>, IoError> {
    let manifest = load_manifest(root)?;
    let mut out = Vec::new();
    for e in manifest.entries.into_iter().filter(|e| split.is_none_or(|s| e.split == s)) {
        let log = load_log(&root.join(&e.path))?;
        if log.config.seed != e.seed || log.config.scenario_type != e.scenario_type {
            return Err(IoError::Format(format!("log {} does not match its manifest entry", e.path)));
        }
        out.push((e, log));
    }
    Ok(out)
}

/// Rebuilds the map a log was simulated on and checks its digest.
pub fn map_for_log(log: &ScenarioLog) -> Result<IntersectionMap, ScenarioError> {
    let (topology, signalized) = scenario_layout(&log.config);
    let map = build_map(topology, signalized, log.config.seed);
    if map.digest() != log.map_digest {
        return Err(ScenarioError::InvalidConfig("map digest does not match the log".into()));
    }
    Ok(map)
}
