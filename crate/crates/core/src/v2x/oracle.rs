use serde::{Deserialize, Serialize};

use super::degrade::{degrade_pose_with, latency_offset, Degradation};
use super::visibility::{compute_visibility, VisibilityMask};
use super::warp::fuse_average;
use super::{AgentRig, V2xConfig, V2xError};
use crate::bev::{encode_placed, BevError, Horizon, MotionField, PlacedAgent, FRAMES_PER_STEP, PAST_STEPS};
use crate::geometry::{GridSpec, Polygon, Pose2};
use crate::rng;
use crate::sim::ScenarioLog;

/// An evaluation window: current log frame `k0` and how far ahead to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub k0: usize,
    pub horizon: Horizon,
}

impl Window {
    /// Observation frames, oldest first, ending at `k0`.
    pub fn obs_frames(&self) -> Vec<usize> {
        (0..PAST_STEPS).rev().map(|j| self.k0.saturating_sub(FRAMES_PER_STEP * j)).collect()
    }

    /// Log frames of steps `0..=T_f`.
    pub fn future_frames(&self) -> Vec<usize> {
        (0..=self.horizon.future_steps()).map(|tau| self.k0 + FRAMES_PER_STEP * tau).collect()
    }

    pub fn last_frame(&self) -> usize {
        self.k0 + FRAMES_PER_STEP * self.horizon.future_steps()
    }
}

/// A rig with its precomputed per-frame visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct RigSetup {
    pub rig: AgentRig,
    pub visibility: VisibilityMask,
}

pub fn prepare_rigs(log: &ScenarioLog, buildings: &[Polygon], config: V2xConfig) -> Vec<RigSetup> {
    config
        .rigs(&log.v2x)
        .into_iter()
        .map(|rig| RigSetup { visibility: compute_visibility(log, &rig, buildings), rig })
        .collect()
}

/// Ego-grid cells whose centers fall inside the grid of a rig at `rig_pose`.
pub fn rig_coverage(grid: &GridSpec, ego_pose: &Pose2, rig_pose: &Pose2) -> Vec<bool> {
    let to_rig = rig_pose.inverse().compose(ego_pose);
    (0..grid.len()).map(|i| grid.contains_point(to_rig.apply(grid.center_of(i)))).collect()
}

/// Ground-truth stand-in for a learned multi-agent predictor.
///
/// Each rig reports the true present and future of every agent it saw in
/// at least one observation frame while that agent was inside its grid.
/// Non-ego rigs report from `latency`-stale frames and place their
/// observations with a noisy copy of their own pose. The per-rig fields are
/// built directly in the ego grid and averaged with [`fuse_average`].
pub fn fused_oracle_predict(
    log: &ScenarioLog,
    rigs: &[RigSetup],
    window: &Window,
    degradation: &Degradation,
    seed: u64,
    grid: &GridSpec,
) -> Result<MotionField, V2xError> {
    let ego_rig = rigs.iter().find(|r| r.rig.is_ego()).ok_or(BevError::UnknownAgent(log.v2x.ego))?;
    let ego_id = ego_rig.rig.agent_id.ok_or(BevError::UnknownAgent(log.v2x.ego))?;
    let k_last = window.last_frame();
    if k_last >= log.frames.len() {
        return Err(BevError::MissingFrames { needed: k_last, available: log.frames.len() }.into());
    }
    let ego_pose = log.frames[window.k0].agent(ego_id).ok_or(BevError::UnknownAgent(ego_id))?.pose();
    let to_ego = ego_pose.inverse();

    let mut fields = Vec::with_capacity(rigs.len());
    let mut coverage = Vec::with_capacity(rigs.len());
    for setup in rigs {
        let rig = &setup.rig;
        let lag = if rig.is_ego() { 0 } else { latency_offset(degradation.latency) };
        let k_cap = window.k0.saturating_sub(lag);
        let Some(true_pose) = rig.pose_at(log, k_cap) else { continue };
        let believed = if rig.is_ego() {
            true_pose
        } else {
            let s = rng::derive_seed(seed, "rig-noise", window.k0 as u64 * 8 + rig.role.index());
            degrade_pose_with(
                &true_pose,
                degradation.noise_mean,
                degradation.noise_std,
                degradation.yaw_std,
                s,
            )
        };

        let mut perceived: Vec<u32> = Vec::new();
        for ko in window.obs_frames().into_iter().map(|k| k.saturating_sub(lag)) {
            let Some(at) = rig.pose_at(log, ko) else { continue };
            let inv = at.inverse();
            for a in &log.frames[ko].agents {
                if setup.visibility.sees(ko, a.id) && grid.contains_point(inv.apply(a.position())) {
                    perceived.push(a.id);
                }
            }
        }
        perceived.sort_unstable();
        perceived.dedup();

        let correction = (believed != true_pose).then(|| believed.compose(&true_pose.inverse()));
        let slots: Vec<Vec<PlacedAgent>> = window
            .future_frames()
            .into_iter()
            .map(|k| {
                let frame = &log.frames[k.saturating_sub(lag)];
                perceived
                    .iter()
                    .filter_map(|&id| frame.agent(id))
                    .map(|a| {
                        let world = a.pose();
                        let est = correction.map_or(world, |c| c.compose(&world));
                        PlacedAgent { id: a.id, pose: to_ego.compose(&est), length: a.length, width: a.width }
                    })
                    .collect()
            })
            .collect();
        fields.push(encode_placed(grid, ego_id, &slots).0);
        coverage.push(if rig.is_ego() { vec![true; grid.len()] } else { rig_coverage(grid, &ego_pose, &believed) });
    }
    fuse_average(&fields, &coverage)
}
