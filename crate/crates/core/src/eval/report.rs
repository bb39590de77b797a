use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{EvalSettings, WindowOutcome};
use crate::bev::Horizon;
use crate::metrics::{apa_with, detection_map, tp_metrics, MatchCounts, TpErrorStats, TP_THRESHOLD};
use crate::v2x::{SampleVisibility, V2xConfig};

pub const REPORT_FORMAT: &str = "crashcast-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSummary {
    pub miou: f64,
    pub vpq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccidentSummary {
    pub apa: f64,
    /// True when no window had an accident in prediction or ground truth.
    pub apa_vacuous: bool,
    pub counts: MatchCounts,
    pub gt_accidents: usize,
    pub tp: TpErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub map: f64,
}

/// Accident metrics over a subset of windows; `apa` is absent when the
/// subset has no ground-truth accident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub windows: usize,
    pub gt_accidents: usize,
    pub apa: Option<f64>,
    pub counts: MatchCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcStratum {
    pub ttc: u32,
    #[serde(flatten)]
    pub stratum: Stratum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub config: V2xConfig,
    pub horizon: Horizon,
    pub samples: usize,
    pub noise: f64,
    pub latency: f64,
    pub seed: u64,
    pub scenarios: usize,
    pub windows: usize,
    pub motion: MotionSummary,
    pub accident: AccidentSummary,
    pub detection: DetectionSummary,
    pub visible: Stratum,
    pub invisible: Stratum,
    pub ttc: Vec<TtcStratum>,
}

fn stratum<'a>(outcomes: impl Iterator<Item = &'a WindowOutcome>, settings: &EvalSettings) -> Stratum {
    let mut counts = MatchCounts::default();
    let (mut windows, mut gt_accidents) = (0, 0);
    for o in outcomes {
        windows += 1;
        gt_accidents += usize::from(o.gt.occurred);
        counts.record(&o.pred, &o.gt);
    }
    let apa = (gt_accidents > 0).then(|| apa_with(&counts, settings.empty_threshold));
    Stratum { windows, gt_accidents, apa, counts }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        s / n as f64
    }
}

/// Aggregates window outcomes. Counts are pooled over all windows before
/// computing APA; mIoU and VPQ are window means; mAP pools detections.
pub fn summarize(outcomes: &[WindowOutcome], settings: &EvalSettings, scenarios: usize) -> MetricsReport {
    let mut counts = MatchCounts::default();
    let mut tps = Vec::new();
    let tp_index = crate::metrics::MATCH_THRESHOLDS.iter().position(|&d| d == TP_THRESHOLD).expect("10 m threshold");
    for o in outcomes {
        let before = counts.per_threshold[tp_index].tp;
        counts.record(&o.pred, &o.gt);
        if counts.per_threshold[tp_index].tp > before {
            tps.push((o.pred.clone(), o.gt.clone()));
        }
    }
    let detections: Vec<_> = outcomes.iter().map(|o| o.detection.clone()).collect();
    let mut bins: BTreeSet<u32> = (1..=4).collect();
    bins.extend(outcomes.iter().filter_map(|o| o.ttc));
    MetricsReport {
        format: REPORT_FORMAT.to_string(),
        config: settings.config,
        horizon: settings.horizon,
        samples: settings.samples,
        noise: settings.noise,
        latency: settings.latency,
        seed: settings.seed,
        scenarios,
        windows: outcomes.len(),
        motion: MotionSummary { miou: mean(outcomes.iter().map(|o| o.miou)), vpq: mean(outcomes.iter().map(|o| o.vpq)) },
        accident: AccidentSummary {
            apa: apa_with(&counts, settings.empty_threshold),
            apa_vacuous: counts.is_empty(),
            gt_accidents: outcomes.iter().filter(|o| o.gt.occurred).count(),
            counts,
            tp: tp_metrics(&tps),
        },
        detection: DetectionSummary { map: detection_map(&detections) },
        visible: stratum(outcomes.iter().filter(|o| o.visibility == SampleVisibility::Visible), settings),
        invisible: stratum(outcomes.iter().filter(|o| o.visibility == SampleVisibility::Invisible), settings),
        ttc: bins
            .into_iter()
            .map(|b| TtcStratum { ttc: b, stratum: stratum(outcomes.iter().filter(|o| o.ttc == Some(b)), settings) })
            .collect(),
    }
}

pub fn parse_report(text: &str) -> Result<MetricsReport, crate::io::IoError> {
    let r: MetricsReport = serde_json::from_str(text)?;
    if r.format != REPORT_FORMAT {
        return Err(crate::io::IoError::Format(format!("unsupported report format {:?}", r.format)));
    }
    if r.visible.windows + r.invisible.windows != r.windows {
        return Err(crate::io::IoError::Format("visibility strata do not sum to the window count".into()));
    }
    Ok(r)
}
