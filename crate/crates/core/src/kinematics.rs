//! Body-segment angles from world joint positions.
//!
//! Planar angles are measured between two segment vectors after projecting
//! both onto the plane of motion. The body frame is built from the hip line
//! (left-right axis) and the world vertical, so whole-body rotation about the
//! vertical and translation leave every angle unchanged.

use crate::geometry::Vec3;
use crate::par::{self, Execution};
use crate::skeleton::{JointLayout, LayoutError, Role, RoleIndex, SkeletonSequence};
use thiserror::Error;

/// Projected vectors shorter than this are treated as degenerate.
pub const PROJECTION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("degenerate body frame: {0}")]
    DegenerateFrame(&'static str),
    #[error("degenerate projection for {part}")]
    DegenerateProjection { part: &'static str },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("frame {frame}: {source}")]
    AtFrame { frame: usize, source: Box<KinematicsError> },
}

/// Anatomical axes of one frame. Each field is the normal of the plane it
/// is named after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame {
    /// Left-right axis, pointing to the subject's left.
    pub sagittal_normal: Vec3,
    /// Front-back axis, pointing forward.
    pub coronal_normal: Vec3,
    /// Vertical axis, pointing up.
    pub transverse_normal: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PostureAngles {
    /// Positive for forward flexion, negative for extension.
    pub trunk_flexion: f64,
    pub trunk_side_flexion: f64,
    pub trunk_twist: f64,
    /// Relative to the trunk; positive for flexion.
    pub neck_flexion: f64,
    pub knee_flexion_left: f64,
    pub knee_flexion_right: f64,
    /// Relative to the trunk; positive for flexion.
    pub upper_arm_flexion_left: f64,
    pub upper_arm_flexion_right: f64,
    pub shoulder_abduction_left: f64,
    pub shoulder_abduction_right: f64,
    pub lower_arm_flexion_left: f64,
    pub lower_arm_flexion_right: f64,
    pub wrist_flexion_left: f64,
    pub wrist_flexion_right: f64,
}

impl PostureAngles {
    pub fn fields(&self) -> [f64; 14] {
        [
            self.trunk_flexion,
            self.trunk_side_flexion,
            self.trunk_twist,
            self.neck_flexion,
            self.knee_flexion_left,
            self.knee_flexion_right,
            self.upper_arm_flexion_left,
            self.upper_arm_flexion_right,
            self.shoulder_abduction_left,
            self.shoulder_abduction_right,
            self.lower_arm_flexion_left,
            self.lower_arm_flexion_right,
            self.wrist_flexion_left,
            self.wrist_flexion_right,
        ]
    }
}

/// Build the anatomical frame from hip positions and the world vertical.
pub fn body_frame(left_hip: Vec3, right_hip: Vec3, up: Vec3) -> Result<BodyFrame, KinematicsError> {
    let sagittal = (left_hip - right_hip)
        .normalized(PROJECTION_EPS)
        .ok_or(KinematicsError::DegenerateFrame("hip joints coincide"))?;
    let up = up.normalized(PROJECTION_EPS).ok_or(KinematicsError::DegenerateFrame("zero up axis"))?;
    let transverse = up
        .reject(sagittal)
        .normalized(PROJECTION_EPS)
        .ok_or(KinematicsError::DegenerateFrame("hip line is vertical"))?;
    Ok(BodyFrame {
        sagittal_normal: sagittal,
        coronal_normal: sagittal.cross(transverse),
        transverse_normal: transverse,
    })
}

/// Angle in degrees, within [0, 180], between `u` and `v` after removing
/// their components along the unit normal `n`.
pub fn projected_angle(u: Vec3, v: Vec3, n: Vec3) -> Result<f64, KinematicsError> {
    let pu = u.reject(n);
    let pv = v.reject(n);
    if pu.norm() < PROJECTION_EPS || pv.norm() < PROJECTION_EPS {
        return Err(KinematicsError::DegenerateProjection { part: "projected segment" });
    }
    Ok(vector_angle(pu, pv))
}

// atan2 of |u×v| and u·v equals the clamped arccosine of the normalised
// dot product but keeps full precision near 0 and 180 degrees.
fn vector_angle(u: Vec3, v: Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v)).to_degrees()
}

fn segment(from: Vec3, to: Vec3, part: &'static str) -> Result<Vec3, KinematicsError> {
    let v = to - from;
    if v.norm() < PROJECTION_EPS {
        Err(KinematicsError::DegenerateProjection { part })
    } else {
        Ok(v)
    }
}

/// Unsigned in-plane angle from `reference` to `seg`. A segment (or
/// reference) perpendicular to the plane has no in-plane deviation and
/// yields 0.
fn plane_angle(reference: Vec3, seg: Vec3, n: Vec3) -> f64 {
    let pr = reference.reject(n);
    let ps = seg.reject(n);
    if pr.norm() < PROJECTION_EPS * reference.norm() || ps.norm() < PROJECTION_EPS * seg.norm() {
        return 0.0;
    }
    vector_angle(pr, ps)
}

/// In-plane angle signed positive when `seg` is rotated from `reference`
/// in the positive sense about `axis`.
fn signed_plane_angle(reference: Vec3, seg: Vec3, axis: Vec3) -> f64 {
    let a = plane_angle(reference, seg, axis);
    if reference.reject(axis).cross(seg.reject(axis)).dot(axis) < 0.0 {
        -a
    } else {
        a
    }
}

/// Angles computed from a single frame with roles already resolved.
pub fn posture_angles(frame: &[Vec3], roles: &RoleIndex, up: Vec3) -> Result<PostureAngles, KinematicsError> {
    let at = |r: Role| frame[roles.get(r)];
    let bf = body_frame(at(Role::LeftHip), at(Role::RightHip), up)?;
    let (left, fwd, vert) = (bf.sagittal_normal, bf.coronal_normal, bf.transverse_normal);

    let mid_hip = at(Role::LeftHip).midpoint(at(Role::RightHip));
    let trunk = segment(mid_hip, at(Role::TrunkTop), "trunk")?;
    let shoulders = segment(at(Role::RightShoulder), at(Role::LeftShoulder), "shoulder line")?;
    let hips = at(Role::LeftHip) - at(Role::RightHip);
    let neck = segment(at(Role::Neck), at(Role::Head), "neck")?;

    // Flexion sign follows the forward component; about the left axis a
    // forward rotation of the vertical is positive.
    let trunk_flexion = signed_plane_angle(vert, trunk, left);
    let trunk_side_flexion = plane_angle(vert, trunk, fwd);
    let trunk_twist = plane_angle(hips, shoulders, vert);

    // Neck and arms are measured against the trunk; an exactly sideways
    // trunk has no sagittal direction and falls back to the vertical.
    let in_plane_or_vertical = |n: Vec3| if trunk.reject(n).norm() < PROJECTION_EPS * trunk.norm() { vert } else { trunk };
    let trunk_sagittal = in_plane_or_vertical(left);
    let trunk_coronal = in_plane_or_vertical(fwd);
    let neck_flexion = signed_plane_angle(trunk_sagittal, neck, left);

    let knee = |hip: Role, knee: Role, ankle: Role, part: &'static str| -> Result<f64, KinematicsError> {
        let thigh = segment(at(hip), at(knee), part)?;
        let shank = segment(at(knee), at(ankle), part)?;
        Ok(vector_angle(thigh, shank))
    };
    let arm = |shoulder: Role, elbow: Role, wrist: Role, hand: Role, side: &'static str| -> Result<[f64; 4], KinematicsError> {
        let upper = segment(at(shoulder), at(elbow), side)?;
        let fore = segment(at(elbow), at(wrist), side)?;
        let palm = segment(at(wrist), at(hand), side)?;
        let down = -trunk_sagittal;
        // Raising the arm forward rotates "down" towards "forward", which is
        // negative about the left axis.
        let flexion = -signed_plane_angle(down, upper, left);
        let abduction = plane_angle(-trunk_coronal, upper, fwd);
        Ok([flexion, abduction, vector_angle(upper, fore), vector_angle(fore, palm)])
    };

    let [ua_l, abd_l, la_l, wr_l] = arm(Role::LeftShoulder, Role::LeftElbow, Role::LeftWrist, Role::LeftHand, "left arm")?;
    let [ua_r, abd_r, la_r, wr_r] =
        arm(Role::RightShoulder, Role::RightElbow, Role::RightWrist, Role::RightHand, "right arm")?;

    Ok(PostureAngles {
        trunk_flexion,
        trunk_side_flexion,
        trunk_twist,
        neck_flexion,
        knee_flexion_left: knee(Role::LeftHip, Role::LeftKnee, Role::LeftAnkle, "left leg")?,
        knee_flexion_right: knee(Role::RightHip, Role::RightKnee, Role::RightAnkle, "right leg")?,
        upper_arm_flexion_left: ua_l,
        upper_arm_flexion_right: ua_r,
        shoulder_abduction_left: abd_l,
        shoulder_abduction_right: abd_r,
        lower_arm_flexion_left: la_l,
        lower_arm_flexion_right: la_r,
        wrist_flexion_left: wr_l,
        wrist_flexion_right: wr_r,
    })
}

/// Posture angles for every frame of a sequence.
pub fn sequence_angles(
    seq: &SkeletonSequence,
    layout: &JointLayout,
    exec: Execution,
) -> Result<Vec<PostureAngles>, KinematicsError> {
    let roles = layout.resolve(&seq.joint_names)?;
    let frames: Vec<usize> = (0..seq.frame_count()).collect();
    par::try_map(exec, &frames, |&f| {
        posture_angles(seq.frame(f), &roles, layout.up)
            .map_err(|e| KinematicsError::AtFrame { frame: f, source: Box::new(e) })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn axis_aligned_frame() {
        let bf = body_frame(v(10.0, 100.0, 0.0), v(-10.0, 100.0, 0.0), v(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(bf.sagittal_normal, v(1.0, 0.0, 0.0));
        assert_eq!(bf.transverse_normal, v(0.0, 1.0, 0.0));
        assert_eq!(bf.coronal_normal, v(0.0, 0.0, 1.0));
    }

    #[test]
    fn coincident_hips_are_degenerate() {
        let p = v(1.0, 2.0, 3.0);
        assert!(matches!(body_frame(p, p, v(0.0, 1.0, 0.0)), Err(KinematicsError::DegenerateFrame(_))));
    }

    #[test]
    fn projected_angle_examples() {
        let z = v(0.0, 0.0, 1.0);
        assert!((projected_angle(v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), z).unwrap() - 90.0).abs() < 1e-12);
        assert_eq!(projected_angle(v(1.0, 2.0, 0.0), v(1.0, 2.0, 0.0), z).unwrap(), 0.0);
        assert!((projected_angle(v(1.0, 0.0, 1.0), v(0.0, 1.0, 1.0), z).unwrap() - 90.0).abs() < 1e-12);
        assert!(matches!(
            projected_angle(v(0.0, 0.0, 3.0), v(1.0, 0.0, 0.0), z),
            Err(KinematicsError::DegenerateProjection { .. })
        ));
    }

    #[test]
    fn arm_flexion_sign_is_forward_positive() {
        let left = v(1.0, 0.0, 0.0);
        let down = v(0.0, -1.0, 0.0);
        assert!((-signed_plane_angle(down, v(0.0, 0.0, 1.0), left) - 90.0).abs() < 1e-12);
        assert!((-signed_plane_angle(down, v(0.0, -1.0, -1.0), left) + 45.0).abs() < 1e-12);
    }
}
