//! Overlap (IoU), success curves, AUC and one-pass evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::gray::GrayImage;
use crate::io::{load_frame, SequenceSpec};

/// Area intersection-over-union of two real-valued boxes.
pub fn overlap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (area_a, area_b) = (a.area(), b.area());
    if !(area_a > 0.0 && area_b > 0.0) {
        log::warn!("overlap of a zero-area box is defined as 0");
        return 0.0;
    }
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    if inter == 0.0 {
        return 0.0;
    }
    (inter / (area_a + area_b - inter)).clamp(0.0, 1.0)
}

/// `0, 0.05, ..., 1` (21 points).
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

/// Fraction of frames whose overlap is strictly above each threshold.
pub fn success_curve(overlaps: &[f64], thresholds: &[f64]) -> Result<SuccessCurve> {
    if overlaps.is_empty() {
        return Err(Error::invalid("success curve needs at least one overlap"));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("thresholds must be ascending"));
    }
    let mut sorted = overlaps.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let fractions = thresholds
        .iter()
        .map(|&t| {
            let at_or_below = sorted.partition_point(|&s| s <= t);
            (sorted.len() - at_or_below) as f64 / n
        })
        .collect();
    Ok(SuccessCurve {
        thresholds: thresholds.to_vec(),
        fractions,
    })
}

/// Trapezoidal area under the success curve.
pub fn auc(curve: &SuccessCurve) -> f64 {
    curve
        .thresholds
        .windows(2)
        .zip(curve.fractions.windows(2))
        .map(|(t, f)| (t[1] - t[0]) * (f[0] + f[1]) / 2.0)
        .sum()
}

/// Per-frame results against ground truth; `None` rows are unlabeled frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRun {
    pub sequence: String,
    pub results: Vec<BoundingBox>,
    pub ground_truth: Vec<Option<BoundingBox>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sequence: String,
    pub frames: usize,
    pub frames_scored: usize,
    pub mean_overlap: f64,
    pub auc: f64,
    pub curve: SuccessCurve,
    /// Overlap per frame, `None` where ground truth is missing.
    pub overlaps: Vec<Option<f64>>,
}

impl TrackRun {
    pub fn overlaps(&self) -> Vec<Option<f64>> {
        self.results
            .iter()
            .enumerate()
            .map(|(i, r)| {
                self.ground_truth
                    .get(i)
                    .copied()
                    .flatten()
                    .map(|g| overlap(r, &g))
            })
            .collect()
    }

    pub fn summarize(&self) -> Result<RunSummary> {
        let per_frame = self.overlaps();
        let scored: Vec<f64> = per_frame.iter().flatten().copied().collect();
        let skipped = per_frame.len() - scored.len();
        if skipped > 0 {
            log::warn!("{}: {skipped} frame(s) without ground truth excluded", self.sequence);
        }
        let curve = success_curve(&scored, &default_thresholds())?;
        Ok(RunSummary {
            sequence: self.sequence.clone(),
            frames: self.results.len(),
            frames_scored: scored.len(),
            mean_overlap: scored.iter().sum::<f64>() / scored.len() as f64,
            auc: auc(&curve),
            curve,
            overlaps: per_frame,
        })
    }
}

/// Anything that can be driven frame by frame from a ground-truth start.
pub trait FrameTracker {
    fn start(&mut self, frame: &GrayImage, init: BoundingBox) -> Result<()>;
    fn track(&mut self, frame: &GrayImage) -> Result<BoundingBox>;
}

/// One-pass evaluation: start at the frame-0 ground truth and run to the end.
pub fn ope_run<T: FrameTracker + ?Sized>(
    seq: &SequenceSpec,
    tracker: &mut T,
) -> Result<(TrackRun, RunSummary)> {
    let init = seq
        .ground_truth
        .first()
        .copied()
        .flatten()
        .ok_or_else(|| Error::invalid(format!("{}: frame 0 has no ground truth", seq.name)))?;
    let mut results = Vec::with_capacity(seq.frames.len());
    for (i, path) in seq.frames.iter().enumerate() {
        let frame = load_frame(path)?;
        if i == 0 {
            tracker.start(&frame, init)?;
            results.push(init);
        } else {
            results.push(tracker.track(&frame)?);
        }
    }
    let run = TrackRun {
        sequence: seq.name.clone(),
        results,
        ground_truth: seq.ground_truth.clone(),
    };
    let summary = run.summarize()?;
    Ok((run, summary))
}
