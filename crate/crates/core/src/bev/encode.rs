use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::field::{InstanceMap, MotionField, CENTERNESS, FLOW_X, FLOW_Y, OFFSET_X, OFFSET_Y, SEG};
use super::BevError;
use crate::geometry::{rasterize_box, GridSpec, OrientedBox, Pose2, Vec2};
use crate::sim::{ScenarioLog, FRAME_HZ};

/// Log frames between consecutive 2 Hz window steps.
pub const FRAMES_PER_STEP: usize = 5;
/// Observation frames per window, including the current one.
pub const PAST_STEPS: usize = 3;
/// Centerness Gaussian standard deviation, cells.
pub const CENTERNESS_SIGMA_CELLS: f64 = 1.5;

/// Prediction horizon of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    #[serde(rename = "2s")]
    S2,
    #[serde(rename = "3s")]
    S3,
    #[serde(rename = "4s")]
    S4,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::S2, Horizon::S3, Horizon::S4];

    /// Future 2 Hz steps after the current one.
    pub fn future_steps(self) -> usize {
        match self {
            Horizon::S2 => 4,
            Horizon::S3 => 6,
            Horizon::S4 => 8,
        }
    }

    pub fn seconds(self) -> f64 {
        self.future_steps() as f64 * 0.5
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Horizon::S2 => "2s",
            Horizon::S3 => "3s",
            Horizon::S4 => "4s",
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Horizon {
    type Err = BevError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2s" | "2" => Ok(Horizon::S2),
            "3s" | "3" => Ok(Horizon::S3),
            "4s" | "4" => Ok(Horizon::S4),
            _ => Err(BevError::InvalidHorizon(s.to_string())),
        }
    }
}

/// An agent footprint already expressed in the target (ego) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedAgent {
    pub id: u32,
    pub pose: Pose2,
    pub length: f64,
    pub width: f64,
}

impl PlacedAgent {
    pub fn obb(&self) -> OrientedBox {
        OrientedBox { center: self.pose, length: self.length, width: self.width }
    }
}

/// Log frame index of time `t0`.
pub fn frame_index(t0: f64) -> usize {
    (t0 * f64::from(FRAME_HZ)).round().max(0.0) as usize
}

/// Rasterizes placed agents into a motion field. `slots[τ]` holds the
/// agents at future step τ. An agent is annotated at τ iff its center lies
/// inside the grid; each cell goes to the nearest center (ties to the lower id)
/// and an agent too small to cover any cell center still gets its center cell.
pub fn encode_placed(grid: &GridSpec, ego_id: u32, slots: &[Vec<PlacedAgent>]) -> (MotionField, InstanceMap) {
    let steps = slots.len();
    let mut field = MotionField::zeros(*grid, ego_id, steps);
    let mut imap = InstanceMap::empty(*grid, steps);
    let n = grid.len();
    let sigma = CENTERNESS_SIGMA_CELLS * grid.cell;
    let radius_cells = (3.0 * CENTERNESS_SIGMA_CELLS).ceil() as isize;
    let mut best: Vec<(f64, u32)> = vec![(f64::INFINITY, u32::MAX); n];

    for (tau, agents) in slots.iter().enumerate() {
        let next: BTreeMap<u32, Vec2> = slots
            .get(tau + 1)
            .map(|s| s.iter().map(|a| (a.id, a.pose.position())).collect())
            .unwrap_or_default();
        best.iter_mut().for_each(|b| *b = (f64::INFINITY, u32::MAX));
        let mut centers: BTreeMap<u32, Vec2> = BTreeMap::new();
        for a in agents {
            let c = a.pose.position();
            if !grid.contains_point(c) {
                continue;
            }
            centers.insert(a.id, c);
            let mut cells = rasterize_box(&a.obb(), grid);
            if cells.is_empty() {
                let (ix, iy) = grid.locate(c).expect("center inside grid");
                cells.push(grid.index(ix, iy));
            }
            for idx in cells {
                let d2 = (grid.center_of(idx) - c).norm_sq();
                let cur = best[idx];
                if d2 < cur.0 || (d2 == cur.0 && a.id < cur.1) {
                    best[idx] = (d2, a.id);
                }
            }
        }

        let ids = imap.ids_mut(tau);
        for (idx, b) in best.iter().enumerate() {
            if b.1 != u32::MAX {
                ids[idx] = b.1;
            }
        }
        let claimed: Vec<(usize, u32)> =
            imap.ids(tau).iter().enumerate().filter(|(_, &id)| id != 0).map(|(i, &id)| (i, id)).collect();
        for (idx, id) in claimed {
            let c = centers[&id];
            let off = c - grid.center_of(idx);
            let flow = next.get(&id).map_or(Vec2::ZERO, |&n| n - c);
            field.channel_mut(tau, SEG)[idx] = 1.0;
            field.channel_mut(tau, OFFSET_X)[idx] = off.x as f32;
            field.channel_mut(tau, OFFSET_Y)[idx] = off.y as f32;
            field.channel_mut(tau, FLOW_X)[idx] = flow.x as f32;
            field.channel_mut(tau, FLOW_Y)[idx] = flow.y as f32;
        }

        let cen = field.channel_mut(tau, CENTERNESS);
        for c in centers.values() {
            let (fx, fy) = grid.continuous_coords(*c);
            let (cx, cy) = (fx.round() as isize, fy.round() as isize);
            for ix in (cx - radius_cells).max(0)..=(cx + radius_cells).min(grid.nx() as isize - 1) {
                for iy in (cy - radius_cells).max(0)..=(cy + radius_cells).min(grid.ny() as isize - 1) {
                    let d2 = (grid.cell_center(ix as usize, iy as usize) - *c).norm_sq();
                    let g = (-d2 / (2.0 * sigma * sigma)).exp() as f32;
                    let idx = grid.index(ix as usize, iy as usize);
                    if g > cen[idx] {
                        cen[idx] = g;
                    }
                }
            }
        }
    }
    (field, imap)
}

/// Agents of log frame `k` placed in the frame of `reference`.
pub fn place_frame(log: &ScenarioLog, k: usize, reference: &Pose2) -> Vec<PlacedAgent> {
    let inv = reference.inverse();
    log.frames[k]
        .agents
        .iter()
        .map(|a| PlacedAgent { id: a.id, pose: inv.compose(&a.pose()), length: a.length, width: a.width })
        .collect()
}

/// Ground-truth motion field for the window starting at `t0` in the frame of `ego_id`.
pub fn encode_motion(
    log: &ScenarioLog,
    t0: f64,
    ego_id: u32,
    grid: &GridSpec,
    horizon: Horizon,
) -> Result<(MotionField, InstanceMap), BevError> {
    let k0 = frame_index(t0);
    let t_f = horizon.future_steps();
    let k_last = k0 + FRAMES_PER_STEP * t_f;
    if k_last >= log.frames.len() {
        return Err(BevError::MissingFrames { needed: k_last, available: log.frames.len() });
    }
    let ego = log.frames[k0].agent(ego_id).ok_or(BevError::UnknownAgent(ego_id))?.pose();
    let slots: Vec<Vec<PlacedAgent>> = (0..=t_f).map(|tau| place_frame(log, k0 + FRAMES_PER_STEP * tau, &ego)).collect();
    Ok(encode_placed(grid, ego_id, &slots))
}
