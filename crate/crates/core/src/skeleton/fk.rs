use super::{BvhDocument, Channel, JointNode, SkeletonSequence, SkeletonSource};
use crate::geometry::{Mat3, Vec3};

/// World position of every joint and end site, per frame, in pre-order.
///
/// Each joint's local transform is a translation by `offset` plus any
/// position channels, followed by its rotation channels composed in file
/// order (intrinsic). Angles in the motion block are degrees.
pub fn forward_kinematics(doc: &BvhDocument) -> SkeletonSequence {
    let joint_names = doc.root.names();
    let width = doc.channel_count();
    let mut positions = Vec::with_capacity(doc.frame_count * joint_names.len());
    for f in 0..doc.frame_count {
        let row = &doc.motion[f * width..(f + 1) * width];
        let mut cursor = 0;
        visit(&doc.root, row, &mut cursor, Mat3::IDENTITY, Vec3::ZERO, &mut positions);
    }
    SkeletonSequence {
        joint_names,
        fps: 1.0 / doc.frame_time,
        positions,
        source: SkeletonSource::BvhTum33,
    }
}

fn visit(
    node: &JointNode,
    row: &[f64],
    cursor: &mut usize,
    parent_rot: Mat3,
    parent_pos: Vec3,
    out: &mut Vec<Vec3>,
) {
    let mut translation = node.offset;
    let mut local = Mat3::IDENTITY;
    for &ch in &node.channels {
        let v = row[*cursor];
        *cursor += 1;
        match ch {
            Channel::Xposition => translation.0[0] += v,
            Channel::Yposition => translation.0[1] += v,
            Channel::Zposition => translation.0[2] += v,
            Channel::Xrotation => local = local * Mat3::rot_x(v.to_radians()),
            Channel::Yrotation => local = local * Mat3::rot_y(v.to_radians()),
            Channel::Zrotation => local = local * Mat3::rot_z(v.to_radians()),
        }
    }
    let pos = parent_pos + parent_rot.transform(translation);
    let rot = parent_rot * local;
    out.push(pos);
    for child in &node.children {
        visit(child, row, cursor, rot, pos, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::parse_bvh;

    fn chain(root_channels: &str, frame: &str) -> BvhDocument {
        parse_bvh(&format!(
            "HIERARCHY\nROOT Hips\n{{\nOFFSET 0 0 0\nCHANNELS 6 {root_channels}\nJOINT Spine\n{{\nOFFSET 0 10 0\nCHANNELS 3 Zrotation Xrotation Yrotation\nEnd Site\n{{\nOFFSET 0 5 0\n}}\n}}\n}}\nMOTION\nFrames: 1\nFrame Time: 0.04\n{frame}\n"
        ))
        .unwrap()
    }

    #[test]
    fn pure_translation_moves_child() {
        let doc = chain("Xposition Yposition Zposition Zrotation Xrotation Yrotation", "1 2 3 0 0 0 0 0 0");
        let seq = forward_kinematics(&doc);
        assert_eq!(seq.frame(0)[1], Vec3::new(1.0, 12.0, 3.0));
        assert_eq!(seq.frame(0)[2], Vec3::new(1.0, 17.0, 3.0));
        assert_eq!(seq.fps, 25.0);
    }

    #[test]
    fn root_z_rotation_swings_child_to_negative_x() {
        let doc = chain("Xposition Yposition Zposition Zrotation Xrotation Yrotation", "0 0 0 90 0 0 0 0 0");
        let child = forward_kinematics(&doc).frame(0)[1];
        assert!((child - Vec3::new(-10.0, 0.0, 0.0)).norm() < 1e-12, "{child:?}");
    }

    #[test]
    fn channel_order_is_intrinsic() {
        // Z then X: Rz(90)·Rx(90) applied to (0,10,0) gives (0,0,10).
        let doc = chain("Xposition Yposition Zposition Zrotation Xrotation Yrotation", "0 0 0 90 90 0 0 0 0");
        let child = forward_kinematics(&doc).frame(0)[1];
        assert!((child - Vec3::new(0.0, 0.0, 10.0)).norm() < 1e-12, "{child:?}");
        // X then Z: Rx(90)·Rz(90) maps (0,10,0) to (-10,0,0).
        let doc = chain("Xposition Yposition Zposition Xrotation Zrotation Yrotation", "0 0 0 90 90 0 0 0 0");
        let child = forward_kinematics(&doc).frame(0)[1];
        assert!((child - Vec3::new(-10.0, 0.0, 0.0)).norm() < 1e-12, "{child:?}");
    }
}
