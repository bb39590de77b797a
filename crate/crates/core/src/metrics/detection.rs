use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::scenario::AgentClass;

/// Center-distance matching thresholds, meters.
pub const DETECTION_THRESHOLDS: [f64; 3] = [1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: AgentClass,
    pub center: Vec2,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub class: AgentClass,
    pub center: Vec2,
}

/// One frame (or scene) of detections and the boxes they should find.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionSample {
    pub predictions: Vec<Detection>,
    pub ground_truth: Vec<GroundTruthBox>,
}

/// 11-point interpolated AP of one class at one threshold, matching greedily
/// in descending score order within each sample.
fn average_precision(samples: &[DetectionSample], class: AgentClass, threshold: f64) -> f64 {
    let n_gt: usize = samples.iter().map(|s| s.ground_truth.iter().filter(|g| g.class == class).count()).sum();
    if n_gt == 0 {
        return 0.0;
    }
    // (score, sample, index) sorted by descending score, stable on position.
    let mut preds: Vec<(f64, usize, usize)> = Vec::new();
    for (si, s) in samples.iter().enumerate() {
        for (pi, p) in s.predictions.iter().enumerate() {
            if p.class == class {
                preds.push((p.score, si, pi));
            }
        }
    }
    preds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut taken: Vec<Vec<bool>> = samples.iter().map(|s| vec![false; s.ground_truth.len()]).collect();
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(preds.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(_, si, pi) in &preds {
        let c = samples[si].predictions[pi].center;
        let mut best: Option<(f64, usize)> = None;
        for (gi, g) in samples[si].ground_truth.iter().enumerate() {
            if g.class != class || taken[si][gi] {
                continue;
            }
            let d = g.center.distance(c);
            if d <= threshold && best.is_none_or(|b| d < b.0) {
                best = Some((d, gi));
            }
        }
        match best {
            Some((_, gi)) => {
                taken[si][gi] = true;
                tp += 1;
            }
            None => fp += 1,
        }
        curve.push((tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64));
    }
    let mut ap = 0.0;
    for r in 0..=10 {
        let r = r as f64 / 10.0;
        let p = curve.iter().filter(|(rec, _)| *rec >= r - 1e-12).map(|c| c.1).fold(0.0, f64::max);
        ap += p;
    }
    ap / 11.0
}

/// Mean AP over the thresholds and the classes that have ground truth.
/// With no ground truth at all the score is 1 if nothing was predicted and
/// 0 otherwise.
pub fn detection_map(samples: &[DetectionSample]) -> f64 {
    let classes: Vec<AgentClass> = AgentClass::ALL
        .into_iter()
        .filter(|c| samples.iter().any(|s| s.ground_truth.iter().any(|g| g.class == *c)))
        .collect();
    if classes.is_empty() {
        let any_pred = samples.iter().any(|s| !s.predictions.is_empty());
        return if any_pred { 0.0 } else { 1.0 };
    }
    let mut sum = 0.0;
    for &c in &classes {
        for t in DETECTION_THRESHOLDS {
            sum += average_precision(samples, c, t);
        }
    }
    sum / (classes.len() * DETECTION_THRESHOLDS.len()) as f64
}
