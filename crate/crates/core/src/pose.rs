//! Parametric Kinect-25 poses, used to drive the scoring pipeline with
//! known angles.
//!
//! Coordinates: Y up, subject facing +Z, subject's left on +X, centimetres.

use crate::geometry::{Mat3, Vec3};
use crate::skeleton::{JointLayout, SkeletonSequence, SkeletonSource};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseParams {
    /// Forward lean of the trunk about the hips, degrees.
    pub trunk_lean: f64,
    /// Sideways lean towards the subject's left, degrees.
    pub trunk_side: f64,
    /// Rotation of the upper body about the trunk axis, degrees.
    pub trunk_twist: f64,
    /// Forward raise of both upper arms, degrees.
    pub arm_raise: f64,
    /// Sideways raise of both upper arms, degrees.
    pub arm_abduction: f64,
    /// Elbow bend, degrees.
    pub elbow_bend: f64,
    /// Knee bend, degrees.
    pub knee_bend: f64,
    /// Forward head tilt relative to the trunk, degrees.
    pub neck_tilt: f64,
}

/// Joint positions in Kinect-25 order.
pub fn kinect_pose(p: &PoseParams) -> Vec<Vec3> {
    let v = Vec3::new;
    let base = v(0.0, 100.0, 0.0);
    let upper = Mat3::rot_x(p.trunk_lean.to_radians())
        * Mat3::rot_z(-p.trunk_side.to_radians())
        * Mat3::rot_y(p.trunk_twist.to_radians());
    let up = |local: Vec3| base + upper.transform(local);

    let arm = |sx: f64| -> [Vec3; 6] {
        let shoulder = v(18.0 * sx, 45.0, 0.0);
        let raise = Mat3::rot_z(sx * p.arm_abduction.to_radians()) * Mat3::rot_x(-p.arm_raise.to_radians());
        let elbow = shoulder + raise.transform(v(0.0, -30.0, 0.0));
        let fore = raise * Mat3::rot_x(-p.elbow_bend.to_radians());
        let wrist = elbow + fore.transform(v(0.0, -25.0, 0.0));
        let hand = wrist + fore.transform(v(0.0, -8.0, 0.0));
        let tip = wrist + fore.transform(v(0.0, -12.0, 0.0));
        let thumb = wrist + fore.transform(v(-2.0 * sx, -8.0, 2.0));
        [up(shoulder), up(elbow), up(wrist), up(hand), up(tip), up(thumb)]
    };
    let leg = |sx: f64| -> [Vec3; 4] {
        let hip = v(10.0 * sx, 100.0, 0.0);
        let knee = hip + v(0.0, -45.0, 0.0);
        let bend = Mat3::rot_x(p.knee_bend.to_radians());
        let ankle = knee + bend.transform(v(0.0, -43.0, 0.0));
        let foot = ankle + bend.transform(v(0.0, -7.0, 10.0));
        [hip, knee, ankle, foot]
    };
    let head_rot = Mat3::rot_x(p.neck_tilt.to_radians());
    let neck = v(0.0, 50.0, 0.0);
    let head = neck + head_rot.transform(v(0.0, 10.0, 0.0));

    let [sl, el, wl, hl, tl, thl] = arm(1.0);
    let [sr, er, wr, hr, tr, thr] = arm(-1.0);
    let [hipl, kl, al, fl] = leg(1.0);
    let [hipr, kr, ar, fr] = leg(-1.0);
    vec![
        base,
        up(v(0.0, 25.0, 0.0)),
        up(neck),
        up(head),
        sl,
        el,
        wl,
        hl,
        sr,
        er,
        wr,
        hr,
        hipl,
        kl,
        al,
        fl,
        hipr,
        kr,
        ar,
        fr,
        up(v(0.0, 45.0, 0.0)),
        tl,
        thl,
        tr,
        thr,
    ]
}

/// A Kinect-25 sequence with one frame per parameter set.
pub fn kinect_sequence(frames: &[PoseParams], fps: f64) -> SkeletonSequence {
    SkeletonSequence {
        joint_names: JointLayout::kinect25().joint_names,
        fps,
        positions: frames.iter().flat_map(kinect_pose).collect(),
        source: SkeletonSource::TableKinect25,
    }
}

/// Render a sequence as a joint table (`frame, x, y, z, ...` rows).
pub fn to_joint_table(seq: &SkeletonSequence) -> String {
    let mut out = String::new();
    for f in 0..seq.frame_count() {
        out.push_str(&f.to_string());
        for p in seq.frame(f) {
            out.push_str(&format!(",{},{},{}", p.x(), p.y(), p.z()));
        }
        out.push('\n');
    }
    out
}
