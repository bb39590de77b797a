//! Accident detection and matching, APA, TP error statistics, and the
//! motion (mIoU, VPQ) and detection (mAP) metrics.

mod accident;
mod detection;
mod motion;

pub use accident::{
    apa, apa_with, declare_any, detect_accident, match_accident, position_difference, tp_metrics, AccidentReport,
    Counts, EmptyThreshold, MatchCounts, TpErrorStats, DANGER_DISTANCE, MATCH_THRESHOLDS, STEP_SECONDS, TP_THRESHOLD,
};
pub use detection::{detection_map, Detection, DetectionSample, GroundTruthBox, DETECTION_THRESHOLDS};
pub use motion::{instance_masks, miou, seg_masks, vpq, VPQ_IOU};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("prediction and ground truth have different shapes")]
    ShapeMismatch,
}
