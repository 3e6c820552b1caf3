//! Per-action risk from frame scores across videos.

use super::{risk_category, RebaError, RiskCategory};
use crate::labels::LabelSet;

/// Frame scores of one video with its per-frame class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredVideo {
    pub participant: String,
    pub scores: Vec<f64>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionRisk {
    pub class: usize,
    pub name: String,
    pub score: f64,
    pub category: RiskCategory,
}

/// Median; an even count takes the mean of the two central values.
/// Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// The items at indices `k * floor(n / 100)` for `k` in `0..100`.
pub fn downsample_to_100<T: Clone>(seq: &[T]) -> Result<Vec<T>, RebaError> {
    if seq.len() < 100 {
        return Err(RebaError::TooShort { len: seq.len() });
    }
    let step = seq.len() / 100;
    Ok((0..100).map(|k| seq[k * step].clone()).collect())
}

fn check(videos: &[ScoredVideo], labels: &LabelSet) -> Result<(), RebaError> {
    for (i, v) in videos.iter().enumerate() {
        if v.scores.len() != v.labels.len() {
            return Err(RebaError::LengthMismatch { video: i, scores: v.scores.len(), labels: v.labels.len() });
        }
        if let Some(&class) = v.labels.iter().find(|&&c| c >= labels.len()) {
            return Err(RebaError::UnknownClass { video: i, class });
        }
    }
    Ok(())
}

fn finish(labels: &LabelSet, per_class: Vec<Option<f64>>) -> Result<Vec<ActionRisk>, RebaError> {
    per_class
        .into_iter()
        .enumerate()
        .map(|(class, score)| {
            let name = labels.name(class).to_string();
            let score = score.ok_or_else(|| RebaError::ActionMissing(name.clone()))?;
            Ok(ActionRisk { class, name, score, category: risk_category(score) })
        })
        .collect()
}

/// Median over each participant's frames of an action, then the median of
/// those participant medians.
pub fn aggregate_median(videos: &[ScoredVideo], labels: &LabelSet) -> Result<Vec<ActionRisk>, RebaError> {
    check(videos, labels)?;
    let mut participants: Vec<&str> = videos.iter().map(|v| v.participant.as_str()).collect();
    participants.sort_unstable();
    participants.dedup();

    let per_class = (0..labels.len())
        .map(|class| {
            let medians: Vec<f64> = participants
                .iter()
                .filter_map(|p| {
                    let frames: Vec<f64> = videos
                        .iter()
                        .filter(|v| v.participant == *p)
                        .flat_map(|v| v.labels.iter().zip(&v.scores).filter(|(&c, _)| c == class).map(|(_, &s)| s))
                        .collect();
                    median(&frames)
                })
                .collect();
            median(&medians)
        })
        .collect();
    finish(labels, per_class)
}

/// Each video is downsampled to 100 frames and averaged per action; the
/// result is the maximum of those averages over videos.
pub fn aggregate_resample_max(videos: &[ScoredVideo], labels: &LabelSet) -> Result<Vec<ActionRisk>, RebaError> {
    check(videos, labels)?;
    let mut best: Vec<Option<f64>> = vec![None; labels.len()];
    for v in videos {
        let scores = downsample_to_100(&v.scores)?;
        let classes = downsample_to_100(&v.labels)?;
        let mut sum = vec![0.0; labels.len()];
        let mut count = vec![0usize; labels.len()];
        for (&c, &s) in classes.iter().zip(&scores) {
            sum[c] += s;
            count[c] += 1;
        }
        for c in 0..labels.len() {
            if count[c] > 0 {
                let mean = sum[c] / count[c] as f64;
                best[c] = Some(best[c].map_or(mean, |b: f64| b.max(mean)));
            }
        }
    }
    finish(labels, best)
}
