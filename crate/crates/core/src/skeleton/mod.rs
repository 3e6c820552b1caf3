//! Skeleton ingestion: BVH motion capture and flat joint-position tables,
//! both normalised into a world-coordinate [`SkeletonSequence`].

mod bvh;
mod fk;
mod layout;
mod table;

pub use bvh::{parse_bvh, serialize_bvh, BvhDocument, Channel, JointNode};
pub use fk::forward_kinematics;
pub use layout::{tum33_neutral_document, tum33_reference_hierarchy, JointLayout, LayoutError, Role, RoleIndex};
pub use table::{read_joint_table, TableOptions, MAX_INVALID_FRACTION};

use crate::geometry::Vec3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("line {line}: malformed hierarchy: {message}")]
    MalformedHierarchy { line: usize, message: String },
    #[error("line {line}: malformed motion data: {message}")]
    MalformedMotion { line: usize, message: String },
    #[error("line {line}: motion row has {found} values, expected {expected}")]
    MotionWidthMismatch { line: usize, expected: usize, found: usize },
    #[error("header declares {declared} frames but {found} motion rows follow")]
    FrameCountMismatch { declared: usize, found: usize },
    #[error("line {line}: row has {found} columns, expected {expected}")]
    RowWidthMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: frame index `{found}` does not increase past {previous}")]
    NonMonotoneFrameIndex { line: usize, previous: i64, found: String },
    #[error("sequence contains no frames")]
    EmptySequence,
    #[error("{invalid} of {total} rows have missing coordinates (more than 20%)")]
    TooManyInvalidRows { invalid: usize, total: usize },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkeletonSource {
    BvhTum33,
    TableKinect25,
}

/// World positions of a fixed joint set over time.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub joint_names: Vec<String>,
    pub fps: f64,
    /// Frame-major: `positions[f * joint_names.len() + j]`.
    pub positions: Vec<Vec3>,
    pub source: SkeletonSource,
}

impl SkeletonSequence {
    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn frame_count(&self) -> usize {
        if self.joint_names.is_empty() {
            0
        } else {
            self.positions.len() / self.joint_names.len()
        }
    }

    pub fn frame(&self, f: usize) -> &[Vec3] {
        let j = self.joint_count();
        &self.positions[f * j..(f + 1) * j]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }
}
