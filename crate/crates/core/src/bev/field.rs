use crate::geometry::GridSpec;

use super::BevError;

/// Channel order within each timestep of a [`MotionField`].
pub const SEG: usize = 0;
pub const CENTERNESS: usize = 1;
pub const OFFSET_X: usize = 2;
pub const OFFSET_Y: usize = 3;
pub const FLOW_X: usize = 4;
pub const FLOW_Y: usize = 5;
pub const CHANNELS: usize = 6;

/// Per-timestep BEV grids: segmentation, centerness, offset (to instance
/// center) and flow (to the next timestep), in the frame of `ego_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    pub grid: GridSpec,
    pub ego_id: u32,
    steps: usize,
    /// Layout `[step][channel][cell]`.
    data: Vec<f32>,
}

impl MotionField {
    pub fn zeros(grid: GridSpec, ego_id: u32, steps: usize) -> Self {
        Self { grid, ego_id, steps, data: vec![0.0; steps * CHANNELS * grid.len()] }
    }

    pub fn from_raw(grid: GridSpec, ego_id: u32, steps: usize, data: Vec<f32>) -> Result<Self, BevError> {
        if data.len() != steps * CHANNELS * grid.len() {
            return Err(BevError::ShapeMismatch);
        }
        Ok(Self { grid, ego_id, steps, data })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, step: usize, ch: usize) -> &[f32] {
        let n = self.grid.len();
        let at = (step * CHANNELS + ch) * n;
        &self.data[at..at + n]
    }

    pub fn channel_mut(&mut self, step: usize, ch: usize) -> &mut [f32] {
        let n = self.grid.len();
        let at = (step * CHANNELS + ch) * n;
        &mut self.data[at..at + n]
    }

    pub fn seg(&self, step: usize) -> &[f32] {
        self.channel(step, SEG)
    }

    pub fn centerness(&self, step: usize) -> &[f32] {
        self.channel(step, CENTERNESS)
    }

    /// Checks channel ranges: probabilities in [0,1], vectors finite.
    pub fn validate(&self) -> Result<(), BevError> {
        for step in 0..self.steps {
            for ch in [SEG, CENTERNESS] {
                if self.channel(step, ch).iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(BevError::InvalidValue);
                }
            }
            for ch in [OFFSET_X, OFFSET_Y, FLOW_X, FLOW_Y] {
                if self.channel(step, ch).iter().any(|v| !v.is_finite()) {
                    return Err(BevError::InvalidValue);
                }
            }
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &MotionField) -> bool {
        self.grid == other.grid && self.steps == other.steps
    }
}

/// Per-timestep instance ids; 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMap {
    pub grid: GridSpec,
    steps: usize,
    ids: Vec<u32>,
}

impl InstanceMap {
    pub fn empty(grid: GridSpec, steps: usize) -> Self {
        Self { grid, steps, ids: vec![0; steps * grid.len()] }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ids(&self, step: usize) -> &[u32] {
        let n = self.grid.len();
        &self.ids[step * n..(step + 1) * n]
    }

    pub fn ids_mut(&mut self, step: usize) -> &mut [u32] {
        let n = self.grid.len();
        &mut self.ids[step * n..(step + 1) * n]
    }

    /// Distinct nonzero ids at `step`, ascending.
    pub fn instances(&self, step: usize) -> Vec<u32> {
        let mut v: Vec<u32> = self.ids(step).iter().copied().filter(|&i| i != 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Flat cell indices per instance at `step`, keyed by id ascending.
    pub fn cells_by_instance(&self, step: usize) -> std::collections::BTreeMap<u32, Vec<usize>> {
        let mut m: std::collections::BTreeMap<u32, Vec<usize>> = std::collections::BTreeMap::new();
        for (i, &id) in self.ids(step).iter().enumerate() {
            if id != 0 {
                m.entry(id).or_default().push(i);
            }
        }
        m
    }

    /// Applies `f` to every nonzero id.
    pub fn relabel(&mut self, mut f: impl FnMut(u32) -> u32) {
        for id in self.ids.iter_mut().filter(|i| **i != 0) {
            *id = f(*id);
        }
    }
}
