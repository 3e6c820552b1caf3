use ergoseg::geometry::{Mat3, Vec3};
use ergoseg::kinematics::{body_frame, posture_angles, projected_angle, sequence_angles, KinematicsError};
use ergoseg::par::Execution;
use ergoseg::pose::{kinect_pose, kinect_sequence, PoseParams};
use ergoseg::skeleton::{forward_kinematics, tum33_neutral_document, JointLayout, Role};
use proptest::prelude::*;

fn angles(p: &PoseParams) -> ergoseg::kinematics::PostureAngles {
    let layout = JointLayout::kinect25();
    let roles = layout.resolve(&layout.joint_names).unwrap();
    posture_angles(&kinect_pose(p), &roles, layout.up).unwrap()
}

#[test]
fn neutral_pose_has_all_angles_zero() {
    let a = angles(&PoseParams::default());
    for (i, v) in a.fields().iter().enumerate() {
        assert!(v.abs() < 1e-6, "field {i} = {v}");
    }
}

#[test]
fn tum_neutral_document_is_neutral_too() {
    let layout = JointLayout::tum33();
    let seq = forward_kinematics(&tum33_neutral_document(3, 0.04));
    for a in sequence_angles(&seq, &layout, Execution::Sequential).unwrap() {
        assert!(a.fields().iter().all(|v| v.abs() < 1e-6), "{a:?}");
    }
}

#[test]
fn forward_lean_of_thirty_degrees() {
    let a = angles(&PoseParams { trunk_lean: 30.0, ..Default::default() });
    assert!((a.trunk_flexion - 30.0).abs() < 0.5, "{}", a.trunk_flexion);
    assert!(a.trunk_side_flexion.abs() < 1e-6);
    // arms move with the trunk, so their flexion relative to it stays zero
    assert!((a.upper_arm_flexion_left - 0.0).abs() < 1e-6);
}

#[test]
fn backward_lean_is_negative() {
    let a = angles(&PoseParams { trunk_lean: -15.0, ..Default::default() });
    assert!((a.trunk_flexion + 15.0).abs() < 1e-6);
}

#[test]
fn shoulder_twist_of_twenty_degrees() {
    let a = angles(&PoseParams { trunk_twist: 20.0, ..Default::default() });
    assert!((a.trunk_twist - 20.0).abs() < 0.5, "{}", a.trunk_twist);
    assert!(a.trunk_flexion.abs() < 1e-6);
}

#[test]
fn limb_angles_follow_constructed_bends() {
    let side = angles(&PoseParams { trunk_side: 12.0, ..Default::default() });
    assert!((side.trunk_side_flexion - 12.0).abs() < 1e-6);
    assert!(side.trunk_flexion.abs() < 1e-6);

    let a = angles(&PoseParams {
        arm_raise: 70.0,
        elbow_bend: 80.0,
        knee_bend: 40.0,
        neck_tilt: 25.0,
        ..Default::default()
    });
    assert!((a.upper_arm_flexion_left - 70.0).abs() < 1e-6);
    assert!((a.upper_arm_flexion_right - 70.0).abs() < 1e-6);
    assert!((a.lower_arm_flexion_left - 80.0).abs() < 1e-6);
    assert!((a.knee_flexion_right - 40.0).abs() < 1e-6);
    assert!((a.neck_flexion - 25.0).abs() < 1e-6);
    assert!(a.wrist_flexion_left.abs() < 1e-6);

    let b = angles(&PoseParams { arm_abduction: 45.0, ..Default::default() });
    assert!((b.shoulder_abduction_left - 45.0).abs() < 1e-6);
    assert!((b.shoulder_abduction_right - 45.0).abs() < 1e-6);
}

#[test]
fn arm_extension_is_negative() {
    let a = angles(&PoseParams { arm_raise: -30.0, ..Default::default() });
    assert!((a.upper_arm_flexion_left + 30.0).abs() < 1e-6);
}

#[test]
fn frame_rotated_about_vertical_rotates_normals() {
    let lh = Vec3::new(10.0, 100.0, 0.0);
    let rh = Vec3::new(-10.0, 100.0, 0.0);
    let up = Vec3::new(0.0, 1.0, 0.0);
    let base = body_frame(lh, rh, up).unwrap();
    let r = Mat3::rot_y(90f64.to_radians());
    let turned = body_frame(r.transform(lh), r.transform(rh), up).unwrap();
    for (a, b) in [
        (base.sagittal_normal, turned.sagittal_normal),
        (base.coronal_normal, turned.coronal_normal),
        (base.transverse_normal, turned.transverse_normal),
    ] {
        assert!((r.transform(a) - b).norm() < 1e-12);
    }
}

#[test]
fn coincident_joints_name_the_part() {
    let layout = JointLayout::kinect25();
    let roles = layout.resolve(&layout.joint_names).unwrap();
    let mut frame = kinect_pose(&PoseParams::default());
    frame[roles.get(Role::LeftElbow)] = frame[roles.get(Role::LeftShoulder)];
    assert_eq!(
        posture_angles(&frame, &roles, layout.up),
        Err(KinematicsError::DegenerateProjection { part: "left arm" })
    );
}

#[test]
fn sequence_errors_carry_frame_index() {
    let layout = JointLayout::kinect25();
    let mut seq = kinect_sequence(&[PoseParams::default(); 4], 12.0);
    let j = seq.joint_count();
    let lh = seq.joint_index("HipLeft").unwrap();
    let rh = seq.joint_index("HipRight").unwrap();
    seq.positions[2 * j + lh] = seq.positions[2 * j + rh];
    let err = sequence_angles(&seq, &layout, Execution::Parallel).unwrap_err();
    assert!(matches!(err, KinematicsError::AtFrame { frame: 2, .. }), "{err:?}");
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn pose_params() -> impl Strategy<Value = PoseParams> {
    (
        (-40.0..80.0f64, -30.0..30.0f64, -45.0..45.0f64, -40.0..150.0f64),
        (0.0..80.0f64, 0.0..120.0f64, 0.0..100.0f64, -30.0..40.0f64),
    )
        .prop_map(|((trunk_lean, trunk_side, trunk_twist, arm_raise), (arm_abduction, elbow_bend, knee_bend, neck_tilt))| {
            PoseParams { trunk_lean, trunk_side, trunk_twist, arm_raise, arm_abduction, elbow_bend, knee_bend, neck_tilt }
        })
}

proptest! {
    #[test]
    fn projected_angle_is_symmetric_scale_invariant_and_bounded(
        u in vec3(), v in vec3(), n in vec3(), a in 0.1..10.0f64, b in 0.1..10.0f64,
    ) {
        let Some(n) = n.normalized(1e-3) else { return Ok(()) };
        let (Ok(x), Ok(y)) = (projected_angle(u, v, n), projected_angle(v, u, n)) else { return Ok(()) };
        prop_assert!((x - y).abs() < 1e-9);
        prop_assert!((0.0..=180.0).contains(&x));
        let z = projected_angle(u * a, v * b, n).unwrap();
        prop_assert!((x - z).abs() < 1e-6);
    }

    #[test]
    fn angles_invariant_under_translation_and_vertical_rotation(
        p in pose_params(), yaw in -180.0..180.0f64, shift in vec3(),
    ) {
        let layout = JointLayout::kinect25();
        let roles = layout.resolve(&layout.joint_names).unwrap();
        let frame = kinect_pose(&p);
        let r = Mat3::rot_y(yaw.to_radians());
        let moved: Vec<Vec3> = frame.iter().map(|&q| r.transform(q) + shift * 10.0).collect();
        let a = posture_angles(&frame, &roles, layout.up).unwrap();
        let b = posture_angles(&moved, &roles, layout.up).unwrap();
        for (x, y) in a.fields().iter().zip(b.fields()) {
            prop_assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
        for x in a.fields() {
            prop_assert!(x.abs() <= 180.0);
        }
        prop_assert!(a.trunk_side_flexion >= 0.0 && a.trunk_twist >= 0.0 && a.knee_flexion_left >= 0.0);
    }
}

#[test]
fn trunk_flexion_is_monotone_in_lean() {
    let mut prev = f64::NEG_INFINITY;
    for step in 0..=90 {
        let a = angles(&PoseParams { trunk_lean: step as f64, ..Default::default() });
        assert!(a.trunk_flexion >= prev, "lean {step}: {} < {prev}", a.trunk_flexion);
        prev = a.trunk_flexion;
    }
}
