use std::collections::BTreeMap;

use super::MetricsError;
use crate::bev::{InstanceMap, MotionField};

/// IoU threshold for matching instances; above 0.5 a match is unique.
pub const VPQ_IOU: f64 = 0.5;

/// Foreground masks at `seg > threshold`, one per step.
pub fn seg_masks(field: &MotionField, threshold: f32) -> Vec<Vec<bool>> {
    (0..field.steps()).map(|s| field.seg(s).iter().map(|&v| v > threshold).collect()).collect()
}

/// Foreground masks of an instance map.
pub fn instance_masks(imap: &InstanceMap) -> Vec<Vec<bool>> {
    (0..imap.steps()).map(|s| imap.ids(s).iter().map(|&id| id != 0).collect()).collect()
}

/// Mean over steps of mask IoU. Steps where both masks are empty are
/// skipped; if every step is empty the result is 1.
pub fn miou(pred: &[Vec<bool>], gt: &[Vec<bool>]) -> Result<f64, MetricsError> {
    if pred.len() != gt.len() || pred.iter().zip(gt).any(|(p, g)| p.len() != g.len()) {
        return Err(MetricsError::ShapeMismatch);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, g) in pred.iter().zip(gt) {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in p.iter().zip(g) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        if union > 0 {
            sum += inter as f64 / union as f64;
            n += 1;
        }
    }
    Ok(if n == 0 { 1.0 } else { sum / n as f64 })
}

/// Video panoptic quality, `Σ IoU(TP) / (TP + FP/2 + FN/2)` accumulated over
/// all steps. A per-step match only counts as TP while both instances have
/// been matched to nothing else earlier in the sequence; a match that breaks
/// that consistency counts as one FP and one FN. Two empty maps score 1.
pub fn vpq(pred: &InstanceMap, gt: &InstanceMap) -> Result<f64, MetricsError> {
    if pred.steps() != gt.steps() || pred.grid != gt.grid {
        return Err(MetricsError::ShapeMismatch);
    }
    let mut pred_hist: BTreeMap<u32, u32> = BTreeMap::new();
    let mut gt_hist: BTreeMap<u32, u32> = BTreeMap::new();
    let (mut iou_sum, mut tp, mut fp, mut fn_) = (0.0, 0u64, 0u64, 0u64);
    for step in 0..pred.steps() {
        let mut area_p: BTreeMap<u32, u64> = BTreeMap::new();
        let mut area_g: BTreeMap<u32, u64> = BTreeMap::new();
        let mut inter: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (&p, &g) in pred.ids(step).iter().zip(gt.ids(step)) {
            if p != 0 {
                *area_p.entry(p).or_default() += 1;
            }
            if g != 0 {
                *area_g.entry(g).or_default() += 1;
            }
            if p != 0 && g != 0 {
                *inter.entry((p, g)).or_default() += 1;
            }
        }
        let mut matched_p: Vec<u32> = Vec::new();
        let mut matched_g: Vec<u32> = Vec::new();
        for (&(p, g), &i) in &inter {
            let union = area_p[&p] + area_g[&g] - i;
            let iou = i as f64 / union as f64;
            if iou <= VPQ_IOU {
                continue;
            }
            matched_p.push(p);
            matched_g.push(g);
            let consistent = pred_hist.get(&p).is_none_or(|&h| h == g) && gt_hist.get(&g).is_none_or(|&h| h == p);
            if consistent {
                tp += 1;
                iou_sum += iou;
                pred_hist.insert(p, g);
                gt_hist.insert(g, p);
            } else {
                fp += 1;
                fn_ += 1;
            }
        }
        fp += area_p.keys().filter(|p| !matched_p.contains(p)).count() as u64;
        fn_ += area_g.keys().filter(|g| !matched_g.contains(g)).count() as u64;
    }
    let den = tp as f64 + 0.5 * (fp + fn_) as f64;
    Ok(if den == 0.0 { 1.0 } else { iou_sum / den })
}
