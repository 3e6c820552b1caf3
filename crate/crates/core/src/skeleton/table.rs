use super::{JointLayout, SkeletonError, SkeletonSequence, SkeletonSource};
use crate::geometry::Vec3;
use std::io::Read;

/// Sequences with more than this fraction of damaged rows are rejected.
pub const MAX_INVALID_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct TableOptions {
    pub has_header: bool,
    pub fps: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { has_header: false, fps: 12.0 }
    }
}

/// Read a `frame_index, x, y, z, ...` table (comma- or tab-delimited) with
/// one xyz triple per joint in `layout.joint_names` order.
///
/// Unparseable or non-finite coordinates mark that joint as missing for the
/// frame. Missing joints are linearly interpolated between the nearest valid
/// frames; leading and trailing gaps copy the nearest valid frame.
pub fn read_joint_table(
    mut input: impl Read,
    layout: &JointLayout,
    opts: &TableOptions,
) -> Result<SkeletonSequence, SkeletonError> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| SkeletonError::Io(e.to_string()))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };

    let joints = layout.joint_names.len();
    let expected = 1 + 3 * joints;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut raw: Vec<Option<Vec3>> = Vec::new();
    let mut previous: Option<i64> = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| SkeletonError::Io(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != expected {
            return Err(SkeletonError::RowWidthMismatch { line, expected, found: record.len() });
        }
        let index = record[0]
            .parse::<i64>()
            .ok()
            .filter(|&i| previous.is_none_or(|p| i > p))
            .ok_or_else(|| SkeletonError::NonMonotoneFrameIndex {
                line,
                previous: previous.unwrap_or(-1),
                found: record[0].to_string(),
            })?;
        previous = Some(index);
        for j in 0..joints {
            let coord = |k: usize| record[1 + 3 * j + k].parse::<f64>().ok().filter(|v| v.is_finite());
            raw.push(match (coord(0), coord(1), coord(2)) {
                (Some(x), Some(y), Some(z)) => Some(Vec3::new(x, y, z)),
                _ => None,
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(SkeletonError::EmptySequence);
    }

    let invalid = raw.chunks(joints.max(1)).filter(|r| r.iter().any(Option::is_none)).count();
    if invalid as f64 > MAX_INVALID_FRACTION * rows as f64 {
        return Err(SkeletonError::TooManyInvalidRows { invalid, total: rows });
    }

    let mut positions = vec![Vec3::ZERO; rows * joints];
    for j in 0..joints {
        let track: Vec<Option<Vec3>> = (0..rows).map(|f| raw[f * joints + j]).collect();
        for (f, p) in repair_track(&track).into_iter().enumerate() {
            positions[f * joints + j] = p;
        }
    }
    Ok(SkeletonSequence {
        joint_names: layout.joint_names.clone(),
        fps: opts.fps,
        positions,
        source: SkeletonSource::TableKinect25,
    })
}

/// Fill gaps in one joint's trajectory. The caller guarantees at least one
/// valid sample.
fn repair_track(track: &[Option<Vec3>]) -> Vec<Vec3> {
    let valid: Vec<usize> = (0..track.len()).filter(|&i| track[i].is_some()).collect();
    let mut out = Vec::with_capacity(track.len());
    let mut next = 0usize;
    for (i, p) in track.iter().enumerate() {
        if let Some(p) = p {
            out.push(*p);
            next += 1;
            continue;
        }
        let before = next.checked_sub(1).map(|k| valid[k]);
        let after = valid.get(next).copied();
        out.push(match (before, after) {
            (Some(a), Some(b)) => {
                let (pa, pb) = (track[a].unwrap(), track[b].unwrap());
                let w = (i - a) as f64 / (b - a) as f64;
                pa + (pb - pa) * w
            }
            (Some(a), None) => track[a].unwrap(),
            (None, Some(b)) => track[b].unwrap(),
            (None, None) => unreachable!("joint track with no valid frame"),
        });
    }
    out
}
