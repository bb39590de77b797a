//! BEV motion fields: ground-truth encoding from logs, instance decoding,
//! polygon approximation, and sampled field variants.

mod decode;
mod encode;
pub mod field;

pub use decode::{decode_instances, instances_to_polygons, sample_field_variants, DecodeParams, DEGENERATE_SQUARE};
pub use encode::{
    encode_motion, encode_placed, frame_index, place_frame, Horizon, PlacedAgent, CENTERNESS_SIGMA_CELLS,
    FRAMES_PER_STEP, PAST_STEPS,
};
pub use field::{InstanceMap, MotionField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BevError {
    #[error("window needs log frame {needed} but the log has {available} frames")]
    MissingFrames { needed: usize, available: usize },
    #[error("agent {0} is not present at the window start")]
    UnknownAgent(u32),
    #[error("field data does not match its grid and step count")]
    ShapeMismatch,
    #[error("field holds out-of-range values")]
    InvalidValue,
    #[error("unknown horizon {0:?} (expected 2s, 3s or 4s)")]
    InvalidHorizon(String),
}
