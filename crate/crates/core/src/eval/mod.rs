//! Window-level evaluation of the oracle pipeline: predict, sample, decode,
//! detect accidents, score, and summarize into a metrics report.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{
    parse_report, summarize, AccidentSummary, DetectionSummary, MetricsReport, MotionSummary, Stratum, TtcStratum,
    REPORT_FORMAT,
};

use crate::bev::{
    decode_instances, encode_motion, instances_to_polygons, place_frame, sample_field_variants, BevError, DecodeParams,
    Horizon, InstanceMap, MotionField, FRAMES_PER_STEP, PAST_STEPS,
};
use crate::dataset::map_for_log;
use crate::geometry::GridSpec;
use crate::metrics::{
    declare_any, detect_accident, instance_masks, miou, seg_masks, vpq, AccidentReport, Detection, DetectionSample,
    EmptyThreshold, GroundTruthBox, DANGER_DISTANCE,
};
use crate::rng;
use crate::scenario::{AgentClass, ScenarioError};
use crate::sim::ScenarioLog;
use crate::v2x::{
    classify_sample_visibility, fused_oracle_predict, prepare_rigs, Degradation, RigSetup, SampleVisibility, V2xConfig,
    V2xError, Window,
};

/// Flow jitter applied to sampled prediction variants, meters.
pub const VARIANT_FLOW_SIGMA: f64 = 0.5;
/// Predicted ids with no ground-truth counterpart are moved above this.
pub const UNMATCHED_ID_BASE: u32 = 1_000_000;
/// Earliest window start: two past steps must exist.
pub const MIN_K0: usize = FRAMES_PER_STEP * (PAST_STEPS - 1);

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    V2x(#[from] V2xError),
    #[error(transparent)]
    Bev(#[from] BevError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub config: V2xConfig,
    pub horizon: Horizon,
    /// Extra sampled fields beyond the original prediction.
    pub samples: usize,
    pub noise: f64,
    pub latency: f64,
    pub seed: u64,
    #[serde(default)]
    pub empty_threshold: EmptyThreshold,
}

impl EvalSettings {
    pub fn new(config: V2xConfig, horizon: Horizon) -> Self {
        Self { config, horizon, samples: 5, noise: 0.0, latency: 0.0, seed: 0, empty_threshold: EmptyThreshold::Perfect }
    }

    pub fn degradation(&self) -> Degradation {
        Degradation::new(self.noise, self.latency)
    }
}

/// A loaded log with its visibility precomputed for every rig role.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub id: String,
    pub log: ScenarioLog,
    all_rigs: Vec<RigSetup>,
}

impl PreparedScenario {
    pub fn new(id: impl Into<String>, log: ScenarioLog) -> Result<Self, EvalError> {
        let map = map_for_log(&log)?;
        let all_rigs = prepare_rigs(&log, &map.buildings, V2xConfig::FourVehiclesInfra);
        Ok(Self { id: id.into(), log, all_rigs })
    }

    pub fn rigs(&self, config: V2xConfig) -> Vec<RigSetup> {
        let roles = config.roles();
        self.all_rigs.iter().filter(|r| roles.contains(&r.rig.role)).cloned().collect()
    }

    pub fn ego_rig(&self) -> &RigSetup {
        self.all_rigs.iter().find(|r| r.rig.is_ego()).expect("ego rig always present")
    }
}

/// Evaluation windows at 0.5 s stride, anchored so the last one ends on the
/// final log frame. Every window has its full horizon inside the log.
pub fn eval_windows(log: &ScenarioLog, horizon: Horizon) -> Vec<Window> {
    let span = FRAMES_PER_STEP * horizon.future_steps();
    let last = log.last_frame_index();
    let mut out = Vec::new();
    let Some(mut k0) = last.checked_sub(span) else { return out };
    while k0 >= MIN_K0 {
        out.push(Window { k0, horizon });
        match k0.checked_sub(FRAMES_PER_STEP) {
            Some(k) => k0 = k,
            None => break,
        }
    }
    out.reverse();
    out
}

/// Time-to-collision bin of a window in whole seconds, halves rounded up.
/// A window whose ground truth holds an accident is binned by that
/// accident's time; otherwise by the logged collision, if any.
pub fn ttc_bin(log: &ScenarioLog, window: &Window, gt: &AccidentReport) -> Option<u32> {
    let ttc = match gt.time {
        Some(t) if gt.occurred => t,
        _ => log.collision.as_ref()?.t - crate::sim::frame_time(window.k0),
    };
    (ttc >= 0.0).then(|| (ttc + 0.5 + 1e-9).floor() as u32)
}

/// Renames predicted ids to the ground-truth ids they overlap most (summed
/// over all steps, one-to-one, largest overlap first). Predictions without a
/// counterpart move above [`UNMATCHED_ID_BASE`].
pub fn relabel_to_ground_truth(pred: &mut InstanceMap, gt: &InstanceMap) {
    let mut overlap: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for step in 0..pred.steps().min(gt.steps()) {
        for (&p, &g) in pred.ids(step).iter().zip(gt.ids(step)) {
            if p != 0 && g != 0 {
                *overlap.entry((p, g)).or_default() += 1;
            }
        }
    }
    let mut pairs: Vec<((u32, u32), u64)> = overlap.into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    let mut used: Vec<u32> = Vec::new();
    for ((p, g), _) in pairs {
        if map.contains_key(&p) || used.contains(&g) {
            continue;
        }
        map.insert(p, g);
        used.push(g);
    }
    pred.relabel(|p| map.get(&p).copied().unwrap_or(UNMATCHED_ID_BASE + p));
}

/// Everything measured on one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutcome {
    pub scenario: String,
    pub k0: usize,
    pub visibility: SampleVisibility,
    pub ttc: Option<u32>,
    pub gt: AccidentReport,
    pub pred: AccidentReport,
    pub miou: f64,
    pub vpq: f64,
    pub detection: DetectionSample,
}

fn detections(
    log: &ScenarioLog,
    window: &Window,
    pred_field: &MotionField,
    pred_map: &InstanceMap,
    grid: &GridSpec,
) -> DetectionSample {
    let k0 = window.k0;
    let ego = log.frames[k0].agent(log.v2x.ego).map(|a| a.pose()).unwrap_or_default();
    let ground_truth = place_frame(log, k0, &ego)
        .into_iter()
        .filter(|a| grid.contains_point(a.pose.position()))
        .map(|a| GroundTruthBox {
            class: log.meta(a.id).map_or(AgentClass::Car, |m| m.class),
            center: a.pose.position(),
        })
        .collect();
    let cen = pred_field.centerness(0);
    let cells = pred_map.cells_by_instance(0);
    let predictions = instances_to_polygons(pred_map, 0)
        .into_iter()
        .map(|(id, poly)| Detection {
            class: log.meta(id).map_or(AgentClass::Car, |m| m.class),
            center: poly.centroid(),
            score: cells[&id].iter().map(|&i| f64::from(cen[i])).fold(0.0, f64::max),
        })
        .collect();
    DetectionSample { predictions, ground_truth }
}

/// Runs the full pipeline on every window of one scenario.
pub fn evaluate_scenario(sc: &PreparedScenario, settings: &EvalSettings) -> Result<Vec<WindowOutcome>, EvalError> {
    let grid = GridSpec::motion();
    let log = &sc.log;
    let rigs = sc.rigs(settings.config);
    let accident_ids = log.accident_ids();
    let degradation = settings.degradation();
    let scenario_seed = rng::derive_seed(settings.seed, "scenario-eval", log.config.seed);
    let params = DecodeParams::default();
    let mut out = Vec::new();
    for window in eval_windows(log, settings.horizon) {
        let t0 = crate::sim::frame_time(window.k0);
        let (_, gt_map) = encode_motion(log, t0, log.v2x.ego, &grid, settings.horizon)?;
        let gt = detect_accident(&gt_map, DANGER_DISTANCE);
        let pred_field = fused_oracle_predict(log, &rigs, &window, &degradation, scenario_seed, &grid)?;
        let variants = sample_field_variants(
            &pred_field,
            settings.samples,
            VARIANT_FLOW_SIGMA,
            rng::derive_seed(scenario_seed, "variants", window.k0 as u64),
        );
        let mut reports = Vec::with_capacity(variants.len());
        let mut first_map = None;
        for v in &variants {
            let mut m = decode_instances(v, &params);
            relabel_to_ground_truth(&mut m, &gt_map);
            reports.push(detect_accident(&m, DANGER_DISTANCE));
            first_map.get_or_insert(m);
        }
        let pred_map = first_map.expect("at least the original field");
        let pred = declare_any(&reports);
        let visibility = if accident_ids.is_empty() {
            SampleVisibility::Visible
        } else {
            classify_sample_visibility(&sc.ego_rig().visibility, &window.obs_frames(), &accident_ids)
        };
        out.push(WindowOutcome {
            scenario: sc.id.clone(),
            k0: window.k0,
            visibility,
            ttc: ttc_bin(log, &window, &gt),
            miou: miou(&seg_masks(&pred_field, 0.5), &instance_masks(&gt_map))?,
            vpq: vpq(&pred_map, &gt_map)?,
            detection: detections(log, &window, &pred_field, &pred_map, &grid),
            gt,
            pred,
        });
    }
    Ok(out)
}

/// Evaluates a batch and summarizes it.
pub fn evaluate_batch(scenarios: &[PreparedScenario], settings: &EvalSettings) -> Result<MetricsReport, EvalError> {
    let mut outcomes = Vec::new();
    for sc in scenarios {
        outcomes.extend(evaluate_scenario(sc, settings)?);
    }
    Ok(summarize(&outcomes, settings, scenarios.len()))
}
