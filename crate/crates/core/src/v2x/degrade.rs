use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::AgentRig;
use crate::geometry::{Pose2, Vec2};
use crate::rng;
use crate::sim::{ScenarioLog, FRAME_HZ};

/// Spread of the pose-error magnitude whenever its mean is positive, meters.
pub const DEFAULT_NOISE_STD: f64 = 0.02;

/// Communication degradation applied to non-ego rigs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Degradation {
    pub noise_mean: f64,
    pub noise_std: f64,
    #[serde(default)]
    pub yaw_std: f64,
    pub latency: f64,
}

impl Degradation {
    /// Pose noise of mean `mu` (spread 0.02 m when `mu > 0`) and latency in seconds.
    pub fn new(mu: f64, latency: f64) -> Self {
        let std = if mu > 0.0 { DEFAULT_NOISE_STD } else { 0.0 };
        Self { noise_mean: mu, noise_std: std, yaw_std: 0.0, latency }
    }

    pub fn is_clean(&self) -> bool {
        self.noise_mean == 0.0 && self.noise_std == 0.0 && self.yaw_std == 0.0 && self.latency == 0.0
    }
}

/// Translates `pose` by `max(0, N(mu, sigma))` meters in a uniform direction.
pub fn degrade_pose(pose: &Pose2, mu: f64, sigma: f64, seed: u64) -> Pose2 {
    degrade_pose_with(pose, mu, sigma, 0.0, seed)
}

/// As [`degrade_pose`], plus optional zero-mean yaw noise. The same seed
/// gives the same standard draws for every `mu`, so displacement grows
/// monotonically with `mu`.
pub fn degrade_pose_with(pose: &Pose2, mu: f64, sigma: f64, yaw_std: f64, seed: u64) -> Pose2 {
    if mu == 0.0 && sigma == 0.0 && yaw_std == 0.0 {
        return *pose;
    }
    let mut r = rng::stream(seed, "pose-noise", 0);
    let z: f64 = StandardNormal.sample(&mut r);
    let dir: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let zy: f64 = StandardNormal.sample(&mut r);
    let mag = (mu + sigma * z).max(0.0);
    let p = pose.position() + Vec2::from_angle(dir) * mag;
    Pose2::new(p.x, p.y, pose.yaw + yaw_std * zy)
}

/// Whole frames of delay for `latency` seconds, rounding halves up.
pub fn latency_offset(latency: f64) -> usize {
    (latency.max(0.0) * f64::from(FRAME_HZ) + 0.5 + 1e-9).floor() as usize
}

/// Source frame for each log frame as delivered by `rig`.
pub fn apply_latency(log: &ScenarioLog, rig: &AgentRig, latency: f64) -> Vec<usize> {
    let off = if rig.is_ego() { 0 } else { latency_offset(latency) };
    (0..log.frames.len()).map(|k| k.saturating_sub(off)).collect()
}
