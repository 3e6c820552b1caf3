//! REBA part scores, frame scores and risk categories.

mod aggregate;
mod tables;

pub use aggregate::{aggregate_median, aggregate_resample_max, downsample_to_100, median, ActionRisk, ScoredVideo};
pub use tables::{BinRow, Bins, PartBins, RebaTables, TableError};

use crate::kinematics::PostureAngles;
use crate::par::{self, Execution};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const MAX_SCORE: u8 = 15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RebaError {
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("{field} = {value} is outside 0-3")]
    InvalidAdjustment { field: &'static str, value: u8 },
    #[error("action `{0}` appears in no video")]
    ActionMissing(String),
    #[error("sequence of {len} frames is shorter than 100")]
    TooShort { len: usize },
    #[error("video {video}: {scores} scores but {labels} labelled frames")]
    LengthMismatch { video: usize, scores: usize, labels: usize },
    #[error("video {video}: class id {class} is outside the label set")]
    UnknownClass { video: usize, class: usize },
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Flexion below this magnitude counts as neutral.
    pub zero: f64,
    /// Twist and side flexion below this are ignored.
    pub binary: f64,
    /// Shoulder abduction below this is ignored.
    pub abduction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { zero: 5.0, binary: 10.0, abduction: 30.0 }
    }
}

impl Thresholds {
    pub fn new(zero: f64, binary: f64, abduction: f64) -> Result<Self, RebaError> {
        let t = Self { zero, binary, abduction };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), RebaError> {
        let all_positive = [self.zero, self.binary, self.abduction].iter().all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(RebaError::InvalidThresholds(format!("{self:?} must all be positive")));
        }
        if self.abduction < self.binary {
            return Err(RebaError::InvalidThresholds(format!(
                "abduction {} is below binary {}",
                self.abduction, self.binary
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartScores {
    pub trunk: u8,
    pub neck: u8,
    pub legs: u8,
    pub upper_arm: u8,
    pub lower_arm: u8,
    pub wrist: u8,
}

impl PartScores {
    pub const MIN: Self = Self { trunk: 1, neck: 1, legs: 1, upper_arm: 1, lower_arm: 1, wrist: 1 };
}

/// Per-action additions to the group and final scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Adjustments {
    pub load_score: u8,
    pub coupling_score: u8,
    pub activity_score: u8,
}

impl Adjustments {
    pub fn new(load_score: u8, coupling_score: u8, activity_score: u8) -> Result<Self, RebaError> {
        let a = Self { load_score, coupling_score, activity_score };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), RebaError> {
        for (field, value) in [
            ("load_score", self.load_score),
            ("coupling_score", self.coupling_score),
            ("activity_score", self.activity_score),
        ] {
            if value > 3 {
                return Err(RebaError::InvalidAdjustment { field, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameScore {
    pub value: u8,
    pub parts: PartScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RiskCategory {
    Low,
    Medium,
    High,
}

impl RiskCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskCategory::Low => "low",
            RiskCategory::Medium => "medium",
            RiskCategory::High => "high",
        }
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(RiskCategory::Low),
            "medium" => Ok(RiskCategory::Medium),
            "high" => Ok(RiskCategory::High),
            _ => Err(format!("unknown risk category `{s}`")),
        }
    }
}

/// <3 is low, 3 to 7 inclusive is medium, anything above 7 is high.
pub fn risk_category(score: f64) -> RiskCategory {
    if score < 3.0 {
        RiskCategory::Low
    } else if score <= 7.0 {
        RiskCategory::Medium
    } else {
        RiskCategory::High
    }
}

fn gate(angle: f64, threshold: f64) -> f64 {
    if angle.abs() < threshold {
        0.0
    } else {
        angle
    }
}

pub fn score_parts(a: &PostureAngles, t: &Thresholds, tables: &RebaTables) -> PartScores {
    let b = &tables.bins;

    let twisted = a.trunk_twist.abs() >= t.binary || a.trunk_side_flexion.abs() >= t.binary;
    let trunk = b.trunk.score(gate(a.trunk_flexion, t.zero)) + u8::from(twisted);
    // No neck twist or side bend is measured, so the neck has no modifier.
    let neck = b.neck.score(gate(a.neck_flexion, t.zero));
    // Bilateral support is assumed; the bins carry the knee-bend additions.
    let legs = b.legs.score(gate(a.knee_flexion_left, t.zero)).max(b.legs.score(gate(a.knee_flexion_right, t.zero)));

    let upper = |flexion: f64, abduction: f64| {
        b.upper_arm.score(gate(flexion, t.zero)) + u8::from(abduction.abs() >= t.abduction)
    };
    let upper_arm = upper(a.upper_arm_flexion_left, a.shoulder_abduction_left)
        .max(upper(a.upper_arm_flexion_right, a.shoulder_abduction_right));
    let lower_arm = b
        .lower_arm
        .score(gate(a.lower_arm_flexion_left, t.zero))
        .max(b.lower_arm.score(gate(a.lower_arm_flexion_right, t.zero)));
    let wrist = b.wrist.score(gate(a.wrist_flexion_left, t.zero)).max(b.wrist.score(gate(a.wrist_flexion_right, t.zero)));

    PartScores {
        trunk: trunk.min(5),
        neck: neck.min(3),
        legs: legs.min(4),
        upper_arm: upper_arm.min(6),
        lower_arm: lower_arm.min(2),
        wrist: wrist.min(3),
    }
}

pub fn frame_reba(parts: &PartScores, adj: &Adjustments, tables: &RebaTables) -> FrameScore {
    let idx = |v: u8, hi: u8| (v.clamp(1, hi) - 1) as usize;
    let a = tables.table_a[idx(parts.neck, 3)][idx(parts.legs, 4)][idx(parts.trunk, 5)] + adj.load_score;
    let b = tables.table_b[idx(parts.lower_arm, 2)][idx(parts.wrist, 3)][idx(parts.upper_arm, 6)] + adj.coupling_score;
    let c = tables.table_c[idx(a, 12)][idx(b, 12)];
    FrameScore { value: (c + adj.activity_score).min(MAX_SCORE), parts: *parts }
}

/// Everything needed to turn posture angles into frame scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scorer {
    pub thresholds: Thresholds,
    pub tables: RebaTables,
}

impl Scorer {
    pub fn score_frame(&self, angles: &PostureAngles, adj: &Adjustments) -> FrameScore {
        frame_reba(&score_parts(angles, &self.thresholds, &self.tables), adj, &self.tables)
    }

    /// One score per frame; `adj` may vary per frame (e.g. by action label).
    pub fn score_sequence(
        &self,
        angles: &[PostureAngles],
        adj: impl Fn(usize) -> Adjustments + Sync + Send,
        exec: Execution,
    ) -> Vec<FrameScore> {
        par::map_range(exec, angles.len(), |f| self.score_frame(&angles[f], &adj(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_are_validated() {
        assert!(Thresholds::new(5.0, 10.0, 30.0).is_ok());
        assert!(Thresholds::new(0.0, 10.0, 30.0).is_err());
        assert!(Thresholds::new(5.0, 40.0, 30.0).is_err());
        assert!(Adjustments::new(0, 4, 0).is_err());
    }

    #[test]
    fn categories_from_text() {
        assert_eq!("High".parse::<RiskCategory>(), Ok(RiskCategory::High));
        assert!("severe".parse::<RiskCategory>().is_err());
    }

    #[test]
    fn activity_is_added_and_capped() {
        let t = RebaTables::default();
        let worst = PartScores { trunk: 5, neck: 3, legs: 4, upper_arm: 6, lower_arm: 2, wrist: 3 };
        let base = frame_reba(&worst, &Adjustments::default(), &t).value;
        let full = Adjustments { load_score: 3, coupling_score: 3, activity_score: 3 };
        assert_eq!(base, 11);
        assert_eq!(frame_reba(&worst, &full, &t).value, 15);
    }
}
