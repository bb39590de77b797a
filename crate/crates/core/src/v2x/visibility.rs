use serde::{Deserialize, Serialize};

use super::{AgentRig, RigRole};
use crate::geometry::{OrientedBox, Polygon, Vec2};
use crate::sim::ScenarioLog;

/// Sensor range, meters.
pub const VIEW_RANGE: f64 = 70.0;

/// Per log frame, the sorted ids visible from one rig.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisibilityMask {
    pub frames: Vec<Vec<u32>>,
}

impl VisibilityMask {
    pub fn sees(&self, k: usize, id: u32) -> bool {
        self.frames.get(k).is_some_and(|v| v.binary_search(&id).is_ok())
    }
}

/// Whether segment `a`-`b` touches the box (closed).
pub fn segment_hits_box(a: Vec2, b: Vec2, obb: &OrientedBox) -> bool {
    let inv = obb.center.inverse();
    let (p, q) = (inv.apply(a), inv.apply(b));
    let (hx, hy) = (0.5 * obb.length, 0.5 * obb.width);
    let d = q - p;
    // Liang-Barsky clip against the box slabs.
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (pc, dc, h) in [(p.x, d.x, hx), (p.y, d.y, hy)] {
        if dc == 0.0 {
            if pc.abs() > h {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((-h - pc) / dc, (h - pc) / dc);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Line-of-sight visibility of every logged agent from `rig`, frame by
/// frame. A target is visible within range when the center-to-center
/// segment crosses no building and, for vehicle rigs, no third vehicle's box.
pub fn compute_visibility(log: &ScenarioLog, rig: &AgentRig, buildings: &[Polygon]) -> VisibilityMask {
    let is_vehicle: std::collections::BTreeMap<u32, bool> =
        log.agents.iter().map(|a| (a.id, !a.class.is_pedestrian())).collect();
    let building_boxes: Vec<(Vec2, Vec2)> = buildings.iter().map(|b| b.aabb()).collect();
    let frames = log
        .frames
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            let Some(eye) = rig.pose_at(log, k).map(|p| p.position()) else {
                return Vec::new();
            };
            let occluders: Vec<(u32, OrientedBox)> = if rig.role == RigRole::Infrastructure {
                Vec::new()
            } else {
                frame
                    .agents
                    .iter()
                    .filter(|a| is_vehicle.get(&a.id).copied().unwrap_or(true) && Some(a.id) != rig.agent_id)
                    .map(|a| (a.id, a.obb()))
                    .collect()
            };
            let mut seen = Vec::new();
            for target in &frame.agents {
                if Some(target.id) == rig.agent_id {
                    seen.push(target.id);
                    continue;
                }
                let t = target.position();
                if eye.distance(t) > rig.range {
                    continue;
                }
                let (lo, hi) = (Vec2::new(eye.x.min(t.x), eye.y.min(t.y)), Vec2::new(eye.x.max(t.x), eye.y.max(t.y)));
                let blocked_by_building = buildings.iter().zip(&building_boxes).any(|(b, (blo, bhi))| {
                    blo.x <= hi.x && bhi.x >= lo.x && blo.y <= hi.y && bhi.y >= lo.y && b.intersects_segment(eye, t)
                });
                if blocked_by_building {
                    continue;
                }
                let blocked_by_vehicle = occluders.iter().any(|(id, obb)| {
                    *id != target.id && {
                        let (olo, ohi) = obb.aabb();
                        olo.x <= hi.x && ohi.x >= lo.x && olo.y <= hi.y && ohi.y >= lo.y && segment_hits_box(eye, t, obb)
                    }
                });
                if !blocked_by_vehicle {
                    seen.push(target.id);
                }
            }
            seen.sort_unstable();
            seen
        })
        .collect();
    VisibilityMask { frames }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleVisibility {
    Visible,
    Invisible,
}

/// A window is invisible when more than half of its observation frames miss
/// at least one accident agent.
pub fn classify_sample_visibility(mask: &VisibilityMask, obs_frames: &[usize], accident_ids: &[u32]) -> SampleVisibility {
    let hidden = obs_frames.iter().filter(|&&k| accident_ids.iter().any(|&id| !mask.sees(k, id))).count();
    if 2 * hidden > obs_frames.len() {
        SampleVisibility::Invisible
    } else {
        SampleVisibility::Visible
    }
}
