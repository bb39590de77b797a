use serde::{Deserialize, Serialize};

use crate::bev::{instances_to_polygons, InstanceMap};
use crate::geometry::{polygon_min_distance, Vec2};

/// Polygon distance at or below which two instances are declared colliding, meters.
pub const DANGER_DISTANCE: f64 = 1.0;
/// Seconds between consecutive motion-field steps.
pub const STEP_SECONDS: f64 = 0.5;
/// Position-difference thresholds for accident matching, meters.
pub const MATCH_THRESHOLDS: [f64; 3] = [5.0, 10.0, 15.0];
/// Threshold at which TP error statistics are computed.
pub const TP_THRESHOLD: f64 = 10.0;

const TIE_EPS: f64 = 1e-9;

/// Outcome of analysing one motion sequence. `min_distance` is the closest
/// approach found (absent when no timestep had two instances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AccidentReport {
    pub occurred: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<[Vec2; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_distance: Option<f64>,
}

impl AccidentReport {
    pub fn none() -> Self {
        Self::default()
    }

    /// An occurred report; ids are sorted and positions follow them.
    pub fn collision(ids: [u32; 2], positions: [Vec2; 2], time: f64, distance: f64) -> Self {
        let (ids, positions) =
            if ids[0] <= ids[1] { (ids, positions) } else { ([ids[1], ids[0]], [positions[1], positions[0]]) };
        Self { occurred: true, ids: Some(ids), positions: Some(positions), time: Some(time), min_distance: Some(distance) }
    }
}

/// Scans every instance pair at every step for the globally closest
/// approach. Ties within 1e-9 m go to the earliest step, then the lowest
/// id pair.
pub fn detect_accident(imap: &InstanceMap, danger: f64) -> AccidentReport {
    let mut cands: Vec<(f64, usize, [u32; 2], [Vec2; 2])> = Vec::new();
    for step in 0..imap.steps() {
        let polys = instances_to_polygons(imap, step);
        for i in 0..polys.len() {
            for j in i + 1..polys.len() {
                let d = polygon_min_distance(&polys[i].1, &polys[j].1);
                cands.push((d, step, [polys[i].0, polys[j].0], [polys[i].1.centroid(), polys[j].1.centroid()]));
            }
        }
    }
    let Some(min) = cands.iter().map(|c| c.0).min_by(f64::total_cmp) else {
        return AccidentReport::none();
    };
    // Candidates are already in (step, pair) order.
    let (d, step, ids, pos) = cands.into_iter().find(|c| c.0 <= min + TIE_EPS).expect("min is attained");
    let time = step as f64 * STEP_SECONDS;
    if d <= danger {
        AccidentReport::collision(ids, pos, time, d)
    } else {
        AccidentReport { min_distance: Some(d), ..AccidentReport::none() }
    }
}

/// Safety-first aggregation over sampled futures: the closest occurred
/// report wins, ties to the earliest time.
pub fn declare_any(reports: &[AccidentReport]) -> AccidentReport {
    reports
        .iter()
        .filter(|r| r.occurred)
        .min_by(|a, b| {
            let da = a.min_distance.unwrap_or(f64::INFINITY);
            let db = b.min_distance.unwrap_or(f64::INFINITY);
            if (da - db).abs() <= TIE_EPS {
                a.time.unwrap_or(f64::INFINITY).total_cmp(&b.time.unwrap_or(f64::INFINITY))
            } else {
                da.total_cmp(&db)
            }
        })
        .cloned()
        .unwrap_or_else(AccidentReport::none)
}

/// Sum of position differences between the colliding agents of two occurred
/// reports. Agents sharing an id are paired directly; the rest are paired
/// greedily by distance.
pub fn position_difference(pred: &AccidentReport, gt: &AccidentReport) -> Option<f64> {
    let (pi, pp) = (pred.ids?, pred.positions?);
    let (gi, gp) = (gt.ids?, gt.positions?);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(2);
    for a in 0..2 {
        if let Some(b) = (0..2).find(|&b| gi[b] == pi[a] && !pairs.iter().any(|p| p.1 == b)) {
            pairs.push((a, b));
        }
    }
    match pairs.len() {
        2 => {}
        1 => pairs.push((1 - pairs[0].0, 1 - pairs[0].1)),
        _ => {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..2 {
                for b in 0..2 {
                    let d = pp[a].distance(gp[b]);
                    if d < best.0 {
                        best = (d, a, b);
                    }
                }
            }
            pairs.push((best.1, best.2));
            pairs.push((1 - best.1, 1 - best.2));
        }
    }
    Some(pairs.iter().map(|&(a, b)| pp[a].distance(gp[b])).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_
    }

    /// `TP / (TP + FP/2 + FN/2)`, or `None` with an empty denominator.
    pub fn accuracy(&self) -> Option<f64> {
        let den = self.tp as f64 + 0.5 * (self.fp + self.fn_) as f64;
        (den > 0.0).then(|| self.tp as f64 / den)
    }
}

/// Contribution of one prediction/ground-truth pair at threshold `d`.
/// A both-occurred pair outside `d` counts as one FP and one FN.
pub fn match_accident(pred: &AccidentReport, gt: &AccidentReport, d: f64) -> Counts {
    match (pred.occurred, gt.occurred) {
        (false, false) => Counts::default(),
        (true, false) => Counts { fp: 1, ..Counts::default() },
        (false, true) => Counts { fn_: 1, ..Counts::default() },
        (true, true) => match position_difference(pred, gt) {
            Some(diff) if diff < d => Counts { tp: 1, ..Counts::default() },
            _ => Counts { tp: 0, fp: 1, fn_: 1 },
        },
    }
}

/// Counts per entry of [`MATCH_THRESHOLDS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub per_threshold: [Counts; 3],
}

impl MatchCounts {
    pub fn record(&mut self, pred: &AccidentReport, gt: &AccidentReport) {
        for (c, d) in self.per_threshold.iter_mut().zip(MATCH_THRESHOLDS) {
            c.add(match_accident(pred, gt, d));
        }
    }

    pub fn merge(&mut self, o: &MatchCounts) {
        for (a, b) in self.per_threshold.iter_mut().zip(o.per_threshold.iter()) {
            a.add(*b);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.per_threshold.iter().all(|c| c.total() == 0)
    }
}

/// What a threshold with no accidents in either predictions or ground truth
/// contributes to APA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyThreshold {
    #[default]
    Perfect,
    Zero,
}

/// Accident prediction accuracy: mean over thresholds of the F1-style ratio.
pub fn apa(counts: &MatchCounts) -> f64 {
    apa_with(counts, EmptyThreshold::Perfect)
}

pub fn apa_with(counts: &MatchCounts, empty: EmptyThreshold) -> f64 {
    let fallback = match empty {
        EmptyThreshold::Perfect => 1.0,
        EmptyThreshold::Zero => 0.0,
    };
    let sum: f64 = counts.per_threshold.iter().map(|c| c.accuracy().unwrap_or(fallback)).sum();
    sum / counts.per_threshold.len() as f64
}

/// Error means over true positives; all `None` when `count == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TpErrorStats {
    pub id_error: Option<f64>,
    pub position_error: Option<f64>,
    pub time_error: Option<f64>,
    pub count: usize,
}

pub fn tp_metrics(pairs: &[(AccidentReport, AccidentReport)]) -> TpErrorStats {
    if pairs.is_empty() {
        return TpErrorStats::default();
    }
    let n = pairs.len() as f64;
    let (mut id, mut pos, mut time) = (0.0, 0.0, 0.0);
    for (p, g) in pairs {
        if p.ids != g.ids {
            id += 1.0;
        }
        pos += position_difference(p, g).unwrap_or(0.0);
        time += match (p.time, g.time) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
    }
    TpErrorStats { id_error: Some(id / n), position_error: Some(pos / n), time_error: Some(time / n), count: pairs.len() }
}
