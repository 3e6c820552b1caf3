//! Frame accuracy, segmental edit score and F1 overlap.

use thiserror::Error;

pub const DEFAULT_TAU: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("prediction has {pred} frames but ground truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("empty sequences")]
    Empty,
    #[error("overlap threshold {0} outside (0, 1)")]
    BadTau(f64),
}

fn check(pred: &[usize], truth: &[usize]) -> Result<(), MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch { pred: pred.len(), truth: truth.len() });
    }
    Ok(())
}

/// Percentage of frames labelled correctly.
pub fn frame_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

/// A maximal run: class and half-open frame interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub class: usize,
    pub start: usize,
    pub end: usize,
}

pub fn segments(labels: &[usize]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (t, &c) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(s) if s.class == c => s.end = t + 1,
            _ => out.push(Segment { class: c, start: t, end: t + 1 }),
        }
    }
    out
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 * (1 - lev / max(|P|, |G|))` over the run class sequences.
pub fn edit_score(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let p: Vec<usize> = segments(pred).iter().map(|s| s.class).collect();
    let g: Vec<usize> = segments(truth).iter().map(|s| s.class).collect();
    let longest = p.len().max(g.len());
    if longest == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * (1.0 - levenshtein(&p, &g) as f64 / longest as f64))
}

/// Segment-level true/false positives and false negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SegmentCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl SegmentCounts {
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            100.0
        } else {
            200.0 * self.tp as f64 / denom as f64
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        100.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

fn iou(a: &Segment, b: &Segment) -> f64 {
    let inter = a.end.min(b.end).saturating_sub(a.start.max(b.start));
    let union = a.end.max(b.end) - a.start.min(b.start);
    inter as f64 / union as f64
}

/// Per-class counts from greedy temporal-order matching. Index = class id;
/// the vector covers every class seen on either side.
pub fn match_segments(pred: &[usize], truth: &[usize], tau: f64) -> Result<Vec<SegmentCounts>, MetricsError> {
    check(pred, truth)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(MetricsError::BadTau(tau));
    }
    let ps = segments(pred);
    let gs = segments(truth);
    let n_classes = ps.iter().chain(&gs).map(|s| s.class + 1).max().unwrap_or(0);
    let mut counts = vec![SegmentCounts::default(); n_classes];
    let mut used = vec![false; gs.len()];
    for p in &ps {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gs.iter().enumerate() {
            if used[j] || g.class != p.class {
                continue;
            }
            let v = iou(p, g);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) if v >= tau => {
                used[j] = true;
                counts[p.class].tp += 1;
            }
            _ => counts[p.class].fp += 1,
        }
    }
    for (j, g) in gs.iter().enumerate() {
        if !used[j] {
            counts[g.class].fn_ += 1;
        }
    }
    Ok(counts)
}

pub fn f1_overlap(pred: &[usize], truth: &[usize], tau: f64) -> Result<f64, MetricsError> {
    let counts = match_segments(pred, truth, tau)?;
    let total = counts.iter().fold(SegmentCounts::default(), |a, c| SegmentCounts {
        tp: a.tp + c.tp,
        fp: a.fp + c.fp,
        fn_: a.fn_ + c.fn_,
    });
    Ok(total.f1())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub edit_score: f64,
    pub f1_overlap: f64,
    pub tau: f64,
    /// Segment-level counts per class id.
    pub per_class: Vec<SegmentCounts>,
    pub n_frames: usize,
    pub n_segments_pred: usize,
    pub n_segments_true: usize,
}

pub fn evaluate(pred: &[usize], truth: &[usize], tau: f64) -> Result<EvalReport, MetricsError> {
    let per_class = match_segments(pred, truth, tau)?;
    Ok(EvalReport {
        accuracy: frame_accuracy(pred, truth)?,
        edit_score: edit_score(pred, truth)?,
        f1_overlap: f1_overlap(pred, truth, tau)?,
        tau,
        per_class,
        n_frames: truth.len(),
        n_segments_pred: segments(pred).len(),
        n_segments_true: segments(truth).len(),
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// `name,accuracy,edit,f1` rows with two decimals plus a final
/// `mean±std` aggregate row.
pub fn report_table(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::from("name,accuracy,edit,f1\n");
    for (name, r) in rows {
        out.push_str(&format!("{name},{:.2},{:.2},{:.2}\n", r.accuracy, r.edit_score, r.f1_overlap));
    }
    let col = |f: fn(&EvalReport) -> f64| {
        let (m, s) = mean_std(&rows.iter().map(|(_, r)| f(r)).collect::<Vec<_>>());
        format!("{m:.2}±{s:.2}")
    };
    out.push_str(&format!(
        "mean±std,{},{},{}\n",
        col(|r| r.accuracy),
        col(|r| r.edit_score),
        col(|r| r.f1_overlap)
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(frame_accuracy(&[0, 1], &[0, 1]).unwrap(), 100.0);
        assert!((frame_accuracy(&[0, 0, 1], &[0, 1, 1]).unwrap() - 66.666_666_666_666_67).abs() < 1e-9);
        assert_eq!(frame_accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(frame_accuracy(&[0], &[0, 1]), Err(MetricsError::LengthMismatch { pred: 1, truth: 2 }));
    }

    #[test]
    fn edit_examples() {
        // truth runs a b c, pred runs a c
        let truth = [0, 0, 1, 1, 2, 2];
        let pred = [0, 0, 0, 2, 2, 2];
        assert!((edit_score(&pred, &truth).unwrap() - 100.0 * (1.0 - 1.0 / 3.0)).abs() < 1e-9);
        assert!((edit_score(&[0, 1, 0, 1, 0], &[0; 5]).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn f1_examples() {
        let truth: Vec<usize> = (0..200).map(|t| usize::from(t >= 100)).collect();
        let pred = vec![0; 200];
        assert!((f1_overlap(&pred, &truth, 0.1).unwrap() - 200.0 / 3.0).abs() < 1e-9);

        // a predicted "b" segment that barely overlaps the true one
        let truth: Vec<usize> = (0..100).map(|t| usize::from((40..60).contains(&t))).collect();
        let pred: Vec<usize> = (0..100).map(|t| usize::from((59..79).contains(&t))).collect();
        let counts = match_segments(&pred, &truth, 0.1).unwrap();
        assert_eq!(counts[1], SegmentCounts { tp: 0, fp: 1, fn_: 1 });
        assert_eq!(f1_overlap(&[1; 4], &[1; 4], 0.9).unwrap(), 100.0);
        assert_eq!(f1_overlap(&[1], &[1], 1.0), Err(MetricsError::BadTau(1.0)));
    }

    #[test]
    fn report_has_aggregate_row() {
        let r = evaluate(&[0, 0, 1], &[0, 0, 1], 0.1).unwrap();
        let mut r2 = r.clone();
        r2.accuracy = 90.0;
        let table = report_table(&[("a".into(), r), ("b".into(), r2)]);
        assert_eq!(table.lines().last().unwrap(), "mean±std,95.00±7.07,100.00±0.00,100.00±0.00");
    }
}
