//! Joint layouts: the ordered joint set of a capture source plus the map
//! from anatomical roles to joint names that the posture computation uses.

use super::{BvhDocument, Channel, JointNode};
use crate::geometry::Vec3;
use crate::keyval::KeyValFile;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    LeftHip,
    RightHip,
    LeftShoulder,
    RightShoulder,
    /// Upper end of the trunk segment (top of the spine).
    TrunkTop,
    Neck,
    Head,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHand,
    RightHand,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl Role {
    pub const ALL: [Role; 17] = [
        Role::LeftHip,
        Role::RightHip,
        Role::LeftShoulder,
        Role::RightShoulder,
        Role::TrunkTop,
        Role::Neck,
        Role::Head,
        Role::LeftElbow,
        Role::RightElbow,
        Role::LeftWrist,
        Role::RightWrist,
        Role::LeftHand,
        Role::RightHand,
        Role::LeftKnee,
        Role::RightKnee,
        Role::LeftAnkle,
        Role::RightAnkle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::LeftHip => "left_hip",
            Role::RightHip => "right_hip",
            Role::LeftShoulder => "left_shoulder",
            Role::RightShoulder => "right_shoulder",
            Role::TrunkTop => "trunk_top",
            Role::Neck => "neck",
            Role::Head => "head",
            Role::LeftElbow => "left_elbow",
            Role::RightElbow => "right_elbow",
            Role::LeftWrist => "left_wrist",
            Role::RightWrist => "right_wrist",
            Role::LeftHand => "left_hand",
            Role::RightHand => "right_hand",
            Role::LeftKnee => "left_knee",
            Role::RightKnee => "right_knee",
            Role::LeftAnkle => "left_ankle",
            Role::RightAnkle => "right_ankle",
        }
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown role `{role}`")]
    UnknownRole { line: usize, role: String },
    #[error("role `{role}` maps to `{joint}`, which is not in the joint set")]
    MissingJoint { role: Role, joint: String },
    #[error("role `{0}` is not mapped")]
    UnmappedRole(Role),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointLayout {
    pub name: String,
    /// Column order for joint tables; FK output order for BVH.
    pub joint_names: Vec<String>,
    pub roles: BTreeMap<Role, String>,
    /// World vertical direction.
    pub up: Vec3,
}

const KINECT25: [&str; 25] = [
    "SpineBase", "SpineMid", "Neck", "Head", "ShoulderLeft", "ElbowLeft", "WristLeft", "HandLeft",
    "ShoulderRight", "ElbowRight", "WristRight", "HandRight", "HipLeft", "KneeLeft", "AnkleLeft",
    "FootLeft", "HipRight", "KneeRight", "AnkleRight", "FootRight", "SpineShoulder", "HandTipLeft",
    "ThumbLeft", "HandTipRight", "ThumbRight",
];

impl JointLayout {
    /// Kinect v2 body joints in SDK order.
    pub fn kinect25() -> Self {
        let roles = [
            (Role::LeftHip, "HipLeft"),
            (Role::RightHip, "HipRight"),
            (Role::LeftShoulder, "ShoulderLeft"),
            (Role::RightShoulder, "ShoulderRight"),
            (Role::TrunkTop, "SpineShoulder"),
            (Role::Neck, "Neck"),
            (Role::Head, "Head"),
            (Role::LeftElbow, "ElbowLeft"),
            (Role::RightElbow, "ElbowRight"),
            (Role::LeftWrist, "WristLeft"),
            (Role::RightWrist, "WristRight"),
            (Role::LeftHand, "HandLeft"),
            (Role::RightHand, "HandRight"),
            (Role::LeftKnee, "KneeLeft"),
            (Role::RightKnee, "KneeRight"),
            (Role::LeftAnkle, "AnkleLeft"),
            (Role::RightAnkle, "AnkleRight"),
        ];
        Self {
            name: "kinect25".into(),
            joint_names: KINECT25.iter().map(|s| s.to_string()).collect(),
            roles: roles.into_iter().map(|(r, n)| (r, n.to_string())).collect(),
            up: Vec3::new(0.0, 1.0, 0.0),
        }
    }

    /// TUM-style 33-node marker skeleton (28 joints + 5 end sites), matching
    /// [`tum33_reference_hierarchy`].
    pub fn tum33() -> Self {
        let roles = [
            (Role::LeftHip, "OSL"),
            (Role::RightHip, "OSR"),
            (Role::LeftShoulder, "SAL"),
            (Role::RightShoulder, "SAR"),
            (Role::TrunkTop, "BRK"),
            (Role::Neck, "OHW"),
            (Role::Head, "KO"),
            (Role::LeftElbow, "OAL"),
            (Role::RightElbow, "OAR"),
            (Role::LeftWrist, "UAL"),
            (Role::RightWrist, "UAR"),
            (Role::LeftHand, "HAL"),
            (Role::RightHand, "HAR"),
            (Role::LeftKnee, "USL"),
            (Role::RightKnee, "USR"),
            (Role::LeftAnkle, "FUL"),
            (Role::RightAnkle, "FUR"),
        ];
        Self {
            name: "tum33".into(),
            joint_names: tum33_reference_hierarchy().names(),
            roles: roles.into_iter().map(|(r, n)| (r, n.to_string())).collect(),
            up: Vec3::new(0.0, 1.0, 0.0),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "kinect25" => Some(Self::kinect25()),
            "tum33" => Some(Self::tum33()),
            _ => None,
        }
    }

    /// Apply a role-map file (`<role> = <joint_name>` lines, optionally
    /// `up = x y z`) on top of this layout.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, LayoutError> {
        let file = KeyValFile::parse(text).map_err(|e| LayoutError::Syntax { line: e.line, message: e.message })?;
        for e in &file.entries {
            if e.key == "up" {
                let v: Vec<f64> = e.value.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                if v.len() != 3 {
                    return Err(LayoutError::Syntax { line: e.line, message: "`up` needs three numbers".into() });
                }
                self.up = Vec3::new(v[0], v[1], v[2]);
                continue;
            }
            let role = e
                .key
                .parse::<Role>()
                .map_err(|_| LayoutError::UnknownRole { line: e.line, role: e.key.clone() })?;
            self.roles.insert(role, e.value.clone());
        }
        Ok(self)
    }

    /// Resolve every role to an index into `joint_names`.
    pub fn resolve(&self, joint_names: &[String]) -> Result<RoleIndex, LayoutError> {
        let mut idx = [0usize; 17];
        for (slot, role) in idx.iter_mut().zip(Role::ALL) {
            let joint = self.roles.get(&role).ok_or(LayoutError::UnmappedRole(role))?;
            *slot = joint_names
                .iter()
                .position(|n| n == joint)
                .ok_or_else(|| LayoutError::MissingJoint { role, joint: joint.clone() })?;
        }
        Ok(RoleIndex(idx))
    }
}

/// Role → joint index, resolved once per sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleIndex([usize; 17]);

impl RoleIndex {
    pub fn get(&self, role: Role) -> usize {
        self.0[role as usize]
    }
}

fn rot3() -> Vec<Channel> {
    vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation]
}

fn chain(names: &[(&str, Vec3)], end: Vec3) -> JointNode {
    let (name, offset) = names[0];
    let node = JointNode::joint(name, offset, rot3());
    if names.len() == 1 {
        node.with_child(JointNode::end_site(name, end))
    } else {
        node.with_child(chain(&names[1..], end))
    }
}

/// Neutral-pose TUM-style hierarchy: Y up, facing +Z, left side on +X,
/// offsets in centimetres.
pub fn tum33_reference_hierarchy() -> JointNode {
    let v = Vec3::new;
    let arm = |side: &str, sx: f64| {
        let n = |s: &str| format!("{s}{side}");
        let (sb, sa, oa, ua, ha, fi) = (n("SB"), n("SA"), n("OA"), n("UA"), n("HA"), n("FI"));
        chain(
            &[
                (&sb, v(8.0 * sx, 0.0, 0.0)),
                (&sa, v(10.0 * sx, 0.0, 0.0)),
                (&oa, v(0.0, -30.0, 0.0)),
                (&ua, v(0.0, -25.0, 0.0)),
                (&ha, v(0.0, -8.0, 0.0)),
                (&fi, v(0.0, -8.0, 0.0)),
            ],
            v(0.0, -3.0, 0.0),
        )
    };
    let leg = |side: &str, sx: f64| {
        let n = |s: &str| format!("{s}{side}");
        let (os, us, fu, fb) = (n("OS"), n("US"), n("FU"), n("FB"));
        chain(
            &[
                (&os, v(10.0 * sx, -5.0, 0.0)),
                (&us, v(0.0, -45.0, 0.0)),
                (&fu, v(0.0, -42.0, 0.0)),
                (&fb, v(0.0, -6.0, 12.0)),
            ],
            v(0.0, 0.0, 5.0),
        )
    };
    // Spine up to the chest, where the arms attach.
    let brk = JointNode::joint("BRK", v(0.0, 15.0, 0.0), rot3())
        .with_child(chain(&[("OHW", v(0.0, 5.0, 0.0)), ("KO", v(0.0, 10.0, 0.0))], v(0.0, 15.0, 0.0)))
        .with_child(arm("L", 1.0))
        .with_child(arm("R", -1.0));
    let mut spine = brk;
    for (name, dy) in [("UHW", 10.0), ("UBW", 10.0), ("OLW", 5.0), ("ULW", 5.0)] {
        spine = JointNode::joint(name, v(0.0, dy, 0.0), rot3()).with_child(spine);
    }
    let root_channels = vec![
        Channel::Xposition,
        Channel::Yposition,
        Channel::Zposition,
        Channel::Zrotation,
        Channel::Xrotation,
        Channel::Yrotation,
    ];
    JointNode::joint("BEC", v(0.0, 0.0, 0.0), root_channels)
        .with_child(spine)
        .with_child(leg("L", 1.0))
        .with_child(leg("R", -1.0))
}

/// A document over [`tum33_reference_hierarchy`] with every frame set to
/// the neutral pose: pelvis at height 100, all rotations zero.
pub fn tum33_neutral_document(frames: usize, frame_time: f64) -> BvhDocument {
    let root = tum33_reference_hierarchy();
    let width = root.total_channels();
    let mut motion = vec![0.0; frames * width];
    for row in motion.chunks_mut(width) {
        row[1] = 100.0;
    }
    BvhDocument { root, frame_count: frames, frame_time, motion }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{forward_kinematics, parse_bvh, serialize_bvh};

    #[test]
    fn tum_hierarchy_has_33_nodes() {
        let names = tum33_reference_hierarchy().names();
        assert_eq!(names.len(), 33);
        let doc = parse_bvh(&serialize_bvh(&tum33_neutral_document(2, 0.04))).unwrap();
        assert_eq!(forward_kinematics(&doc).joint_count(), 33);
    }

    #[test]
    fn default_layouts_resolve() {
        let k = JointLayout::kinect25();
        assert_eq!(k.joint_names.len(), 25);
        k.resolve(&k.joint_names).unwrap();
        let t = JointLayout::tum33();
        t.resolve(&t.joint_names).unwrap();
    }

    #[test]
    fn overrides_replace_roles() {
        let k = JointLayout::kinect25().with_overrides("trunk_top = SpineMid\nup = 0 0 1").unwrap();
        assert_eq!(k.roles[&Role::TrunkTop], "SpineMid");
        assert_eq!(k.up, Vec3::new(0.0, 0.0, 1.0));
        let err = JointLayout::kinect25().with_overrides("tail = X").unwrap_err();
        assert_eq!(err, LayoutError::UnknownRole { line: 1, role: "tail".into() });
        let bad = JointLayout::kinect25().with_overrides("head = Nope").unwrap();
        assert!(matches!(bad.resolve(&bad.joint_names), Err(LayoutError::MissingJoint { .. })));
    }
}
