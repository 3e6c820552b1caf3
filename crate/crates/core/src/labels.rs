//! Hierarchical action labels, frame annotations and run-length segments.

use crate::reba::RiskCategory;
use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("line {line}: invalid label `{text}` (need 1-4 non-empty tiers separated by `/`)")]
    InvalidLabel { line: usize, text: String },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: unknown label `{label}`")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: malformed annotation row: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: span starting at frame {start} overlaps the previous span ending at {previous_end}")]
    OverlapError { line: usize, start: usize, previous_end: usize },
    #[error("frames {from}-{to} are not covered by any span")]
    GapError { from: usize, to: usize },
    #[error("line {line}: span starting at frame {start} precedes the previous span starting at {previous_start}")]
    UnsortedError { line: usize, start: usize, previous_start: usize },
    #[error("annotation track is empty")]
    EmptyTrack,
    #[error("empty input sequence")]
    EmptyInput,
    #[error("no risk category for label `{0}`")]
    MissingRisk(String),
    #[error("i/o: {0}")]
    Io(String),
}

/// An action label made of 1-4 tiers, e.g. `Box/Bend/Place/Low`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionLabel {
    pub tiers: Vec<String>,
}

impl ActionLabel {
    pub fn parse(text: &str) -> Option<Self> {
        let tiers: Vec<String> = text.trim().split('/').map(|t| t.trim().to_string()).collect();
        if tiers.is_empty() || tiers.len() > 4 || tiers.iter().any(String::is_empty) {
            return None;
        }
        Some(Self { tiers })
    }

    pub fn canonical(&self) -> String {
        self.tiers.join("/")
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Ordered label set; position defines the class id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<ActionLabel>,
    names: Vec<String>,
    index: HashMap<String, usize>,
}

// Assembled from the tier descriptions of the two datasets; the literal
// label strings are not published, so both lists can be replaced by file.
const UW_IOM17: [&str; 17] = [
    "None/Walk/None/None",
    "Box/Walk/Hold/None",
    "Box/Stand/Reach/High",
    "Box/Stand/PickUp/High",
    "Box/Stand/PickUp/Medium",
    "Box/Bend/PickUp/Low",
    "Box/Stand/Place/High",
    "Box/Stand/Place/Medium",
    "Box/Bend/Place/Low",
    "Box/Stand/Hold/Medium",
    "Rod/Stand/Reach/High",
    "Rod/Stand/PickUp/High",
    "Rod/Stand/PickUp/Medium",
    "Rod/Bend/PickUp/Low",
    "Rod/Stand/Place/High",
    "Rod/Stand/Place/Medium",
    "Rod/Bend/Place/Low",
];

const TUM21: [&str; 21] = [
    "Close/Cabinet",
    "Close/Drawer",
    "Open/Cabinet",
    "Open/Drawer",
    "PickUp/OneHand",
    "PickUp/BothHands",
    "Place/OneHand",
    "Place/BothHands",
    "Reach/Cabinet",
    "Reach/Drawer",
    "Reach/DoNotHold",
    "Reach/OneHand",
    "Reach/BothHands",
    "Stand/DoNotHold",
    "Stand/OneHand",
    "Stand/BothHands",
    "Twist/DoNotHold",
    "Twist/OneHand",
    "Walk/DoNotHold",
    "Walk/OneHand",
    "Walk/BothHands",
];

impl LabelSet {
    pub fn new(labels: Vec<ActionLabel>) -> Result<Self, LabelError> {
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.canonical(), i).is_some() {
                return Err(LabelError::DuplicateLabel { line: i + 1, label: l.canonical() });
            }
        }
        let names = labels.iter().map(ActionLabel::canonical).collect();
        Ok(Self { labels, names, index })
    }

    /// One canonical label per line; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<Self, LabelError> {
        let mut labels: Vec<ActionLabel> = Vec::new();
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let label =
                ActionLabel::parse(line).ok_or_else(|| LabelError::InvalidLabel { line: i + 1, text: line.to_string() })?;
            if seen.insert(label.canonical(), ()).is_some() {
                return Err(LabelError::DuplicateLabel { line: i + 1, label: label.canonical() });
            }
            labels.push(label);
        }
        Self::new(labels)
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        Self::parse(&names.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join("\n")).expect("valid label names")
    }

    /// Default 17-label, four-tier object-manipulation set.
    pub fn uw_iom17() -> Self {
        Self::from_names(&UW_IOM17)
    }

    /// Default 21-label, two-tier kitchen set.
    pub fn tum21() -> Self {
        Self::from_names(&TUM21)
    }

    /// `n` synthetic labels `class0 .. class{n-1}`.
    pub fn numbered(n: usize) -> Self {
        Self::from_names(&(0..n).map(|i| format!("class{i}")).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, canonical: &str) -> Option<usize> {
        self.index.get(canonical.trim()).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn label(&self, id: usize) -> &ActionLabel {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[ActionLabel] {
        &self.labels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn to_text(&self) -> String {
        self.labels.iter().map(|l| l.canonical() + "\n").collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    /// Inclusive.
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub class: usize,
}

/// Contiguous, non-overlapping spans covering `[0, total_frames)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationTrack {
    spans: Vec<Span>,
    total_frames: usize,
}

impl AnnotationTrack {
    pub fn new(spans: Vec<Span>, total_frames: usize) -> Result<Self, LabelError> {
        Self::validate(&spans, total_frames, &(1..=spans.len()).collect::<Vec<_>>())?;
        Ok(Self { spans, total_frames })
    }

    /// `lines[i]` is the source line of span `i`, for error messages.
    fn validate(spans: &[Span], total_frames: usize, lines: &[usize]) -> Result<(), LabelError> {
        let first = spans.first().ok_or(LabelError::EmptyTrack)?;
        if first.start > 0 {
            return Err(LabelError::GapError { from: 0, to: first.start - 1 });
        }
        for (i, s) in spans.iter().enumerate() {
            if s.end < s.start {
                return Err(LabelError::Malformed {
                    line: lines[i],
                    message: format!("end {} before start {}", s.end, s.start),
                });
            }
            if i == 0 {
                continue;
            }
            let prev = spans[i - 1];
            if s.start < prev.start {
                return Err(LabelError::UnsortedError { line: lines[i], start: s.start, previous_start: prev.start });
            }
            if s.start <= prev.end {
                return Err(LabelError::OverlapError { line: lines[i], start: s.start, previous_end: prev.end });
            }
            if s.start > prev.end + 1 {
                return Err(LabelError::GapError { from: prev.end + 1, to: s.start - 1 });
            }
        }
        let last_end = spans.last().map_or(0, |s| s.end);
        if last_end + 1 < total_frames {
            return Err(LabelError::GapError { from: last_end + 1, to: total_frames - 1 });
        }
        if last_end + 1 > total_frames {
            return Err(LabelError::Malformed {
                line: lines[spans.len() - 1],
                message: format!("span ends at frame {last_end} but the video has {total_frames} frames"),
            });
        }
        Ok(())
    }

    /// Spans from a frame-label sequence (one span per run).
    pub fn from_frame_labels(frames: &[usize]) -> Result<Self, LabelError> {
        let runs = run_length_encode(frames)?;
        let mut spans = Vec::with_capacity(runs.runs.len());
        let mut start = 0;
        for &(class, len) in &runs.runs {
            spans.push(Span { start, end: start + len - 1, class });
            start += len;
        }
        Ok(Self { spans, total_frames: frames.len() })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    /// `start,end,label` rows.
    pub fn to_text(&self, labels: &LabelSet) -> String {
        self.spans.iter().map(|s| format!("{},{},{}\n", s.start, s.end, labels.label(s.class))).collect()
    }
}

/// Parse `start,end,label` rows (0-based, inclusive). When `total_frames` is
/// `None` the track length is taken from the last span.
pub fn parse_annotations(
    mut input: impl Read,
    labels: &LabelSet,
    total_frames: Option<usize>,
) -> Result<AnnotationTrack, LabelError> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| LabelError::Io(e.to_string()))?;
    let mut spans = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.splitn(3, [',', '\t']).map(str::trim).collect();
        if cols.len() != 3 {
            return Err(LabelError::Malformed { line, message: format!("expected `start,end,label`, found `{row}`") });
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| LabelError::Malformed { line, message: format!("bad frame index `{s}`") })
        };
        let (start, end) = (num(cols[0])?, num(cols[1])?);
        let class = labels.id(cols[2]).ok_or_else(|| LabelError::UnknownLabel { line, label: cols[2].to_string() })?;
        spans.push(Span { start, end, class });
        lines.push(line);
    }
    let total = total_frames.unwrap_or_else(|| spans.last().map_or(0, |s: &Span| s.end + 1));
    AnnotationTrack::validate(&spans, total, &lines)?;
    Ok(AnnotationTrack { spans, total_frames: total })
}

/// Class id of every frame.
pub fn to_frame_labels(track: &AnnotationTrack) -> Vec<usize> {
    let mut out = Vec::with_capacity(track.total_frames);
    for s in &track.spans {
        out.extend(std::iter::repeat_n(s.class, s.end - s.start + 1));
    }
    out
}

/// Maximal runs of equal class ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRun {
    /// `(class, length)`, adjacent classes always differ.
    pub runs: Vec<(usize, usize)>,
}

impl SegmentRun {
    pub fn total_frames(&self) -> usize {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn classes(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.0).collect()
    }

    /// `(class, start, end_exclusive)` per run.
    pub fn intervals(&self) -> Vec<(usize, usize, usize)> {
        let mut start = 0;
        self.runs
            .iter()
            .map(|&(c, len)| {
                let iv = (c, start, start + len);
                start += len;
                iv
            })
            .collect()
    }
}

pub fn run_length_encode(frames: &[usize]) -> Result<SegmentRun, LabelError> {
    let (&first, rest) = frames.split_first().ok_or(LabelError::EmptyInput)?;
    let mut runs = vec![(first, 1)];
    for &c in rest {
        match runs.last_mut() {
            Some((last, len)) if *last == c => *len += 1,
            _ => runs.push((c, 1)),
        }
    }
    Ok(SegmentRun { runs })
}

pub fn run_length_decode(runs: &SegmentRun) -> Vec<usize> {
    runs.runs.iter().flat_map(|&(c, len)| std::iter::repeat_n(c, len)).collect()
}

/// Risk category per class id. `risk` is keyed by canonical label.
pub fn attach_risk(labels: &LabelSet, risk: &HashMap<String, RiskCategory>) -> Result<Vec<RiskCategory>, LabelError> {
    labels
        .labels()
        .iter()
        .map(|l| {
            let name = l.canonical();
            risk.get(&name).copied().ok_or(LabelError::MissingRisk(name))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> LabelSet {
        LabelSet::from_names(&["A", "B"])
    }

    #[test]
    fn default_sets_have_expected_sizes() {
        assert_eq!(LabelSet::uw_iom17().len(), 17);
        assert!(LabelSet::uw_iom17().labels().iter().all(|l| l.tiers.len() == 4));
        assert_eq!(LabelSet::tum21().len(), 21);
        assert!(LabelSet::tum21().labels().iter().all(|l| l.tiers.len() == 2));
    }

    #[test]
    fn label_file_rejects_duplicates_and_bad_tiers() {
        assert!(matches!(LabelSet::parse("a\nb\na"), Err(LabelError::DuplicateLabel { line: 3, .. })));
        assert!(matches!(LabelSet::parse("a//b"), Err(LabelError::InvalidLabel { line: 1, .. })));
        assert!(matches!(LabelSet::parse("a/b/c/d/e"), Err(LabelError::InvalidLabel { .. })));
    }

    #[test]
    fn two_contiguous_spans() {
        let t = parse_annotations(&b"0,9,A\n10,19,B\n"[..], &ab(), Some(20)).unwrap();
        assert_eq!(t.spans().len(), 2);
        assert_eq!(t.total_frames(), 20);
    }

    #[test]
    fn overlap_gap_unsorted_and_unknown() {
        let l = ab();
        assert!(matches!(
            parse_annotations(&b"0,9,A\n5,19,B\n"[..], &l, Some(20)),
            Err(LabelError::OverlapError { line: 2, start: 5, previous_end: 9 })
        ));
        assert_eq!(
            parse_annotations(&b"0,9,A\n12,19,B\n"[..], &l, Some(20)),
            Err(LabelError::GapError { from: 10, to: 11 })
        );
        assert!(matches!(
            parse_annotations(&b"10,19,B\n0,9,A\n"[..], &l, None),
            Err(LabelError::GapError { from: 0, to: 9 })
        ));
        assert!(matches!(
            parse_annotations(&b"0,9,A\n10,19,B\n3,4,A\n"[..], &l, None),
            Err(LabelError::UnsortedError { line: 3, .. })
        ));
        assert!(matches!(
            parse_annotations(&b"0,9,C\n"[..], &l, None),
            Err(LabelError::UnknownLabel { line: 1, .. })
        ));
        assert_eq!(
            parse_annotations(&b"0,9,A\n"[..], &l, Some(15)),
            Err(LabelError::GapError { from: 10, to: 14 })
        );
    }

    #[test]
    fn frame_labels_and_runs() {
        let t = AnnotationTrack::new(
            vec![Span { start: 0, end: 2, class: 0 }, Span { start: 3, end: 4, class: 1 }],
            5,
        )
        .unwrap();
        let frames = to_frame_labels(&t);
        assert_eq!(frames, vec![0, 0, 0, 1, 1]);
        let runs = run_length_encode(&frames).unwrap();
        assert_eq!(runs.runs, vec![(0, 3), (1, 2)]);
        assert_eq!(AnnotationTrack::from_frame_labels(&frames).unwrap(), t);
    }

    #[test]
    fn rle_examples() {
        assert_eq!(run_length_encode(&[7, 7, 3, 3, 3, 7]).unwrap().runs, vec![(7, 2), (3, 3), (7, 1)]);
        assert_eq!(run_length_encode(&[4; 9]).unwrap().runs, vec![(4, 9)]);
        assert_eq!(run_length_encode(&[]), Err(LabelError::EmptyInput));
    }

    #[test]
    fn attach_risk_requires_every_label() {
        let l = ab();
        assert_eq!(attach_risk(&l, &HashMap::new()), Err(LabelError::MissingRisk("A".into())));
        let risk: HashMap<String, RiskCategory> =
            [("A".to_string(), RiskCategory::Low), ("B".to_string(), RiskCategory::High)].into();
        assert_eq!(attach_risk(&l, &risk).unwrap(), vec![RiskCategory::Low, RiskCategory::High]);
    }
}
