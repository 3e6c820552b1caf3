use super::SkeletonError;
use crate::geometry::Vec3;
use std::collections::HashSet;
use std::fmt::{self, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn is_rotation(self) -> bool {
        matches!(self, Channel::Xrotation | Channel::Yrotation | Channel::Zrotation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return Err(()),
        })
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointNode {
    pub name: String,
    pub offset: Vec3,
    pub channels: Vec<Channel>,
    pub children: Vec<JointNode>,
    pub is_end_site: bool,
}

impl JointNode {
    pub fn joint(name: impl Into<String>, offset: Vec3, channels: Vec<Channel>) -> Self {
        Self { name: name.into(), offset, channels, children: Vec::new(), is_end_site: false }
    }

    /// End site of `parent`, named `<parent>_end`.
    pub fn end_site(parent: &str, offset: Vec3) -> Self {
        Self {
            name: format!("{parent}_end"),
            offset,
            channels: Vec::new(),
            children: Vec::new(),
            is_end_site: true,
        }
    }

    pub fn with_child(mut self, child: JointNode) -> Self {
        self.children.push(child);
        self
    }

    /// Channels summed over this node and all descendants.
    pub fn total_channels(&self) -> usize {
        self.channels.len() + self.children.iter().map(JointNode::total_channels).sum::<usize>()
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a JointNode>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut nodes = Vec::new();
        self.walk(&mut nodes);
        nodes.into_iter().map(|n| n.name.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvhDocument {
    pub root: JointNode,
    pub frame_count: usize,
    pub frame_time: f64,
    /// Frame-major channel values; rotations in degrees.
    pub motion: Vec<f64>,
}

impl BvhDocument {
    pub fn channel_count(&self) -> usize {
        self.root.total_channels()
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        let w = self.channel_count();
        &self.motion[f * w..(f + 1) * w]
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(1, |t| t.0)
    }

    fn expect(&mut self, word: &str) -> Result<usize, SkeletonError> {
        match self.next() {
            Some((line, t)) if t == word => Ok(line),
            Some((line, t)) => Err(malformed(line, format!("expected `{word}`, found `{t}`"))),
            None => Err(malformed(self.last_line(), format!("expected `{word}`, found end of input"))),
        }
    }

    fn number(&mut self) -> Result<f64, SkeletonError> {
        match self.next() {
            Some((line, t)) => parse_finite(t)
                .ok_or_else(|| malformed(line, format!("expected a number, found `{t}`"))),
            None => Err(malformed(self.last_line(), "expected a number, found end of input")),
        }
    }

    /// All remaining tokens on `line`, joined by single spaces.
    fn rest_of_line(&mut self, line: usize) -> String {
        let mut parts = Vec::new();
        while let Some((l, t)) = self.peek() {
            if l != line {
                break;
            }
            parts.push(t);
            self.pos += 1;
        }
        parts.join(" ")
    }
}

fn malformed(line: usize, message: impl Into<String>) -> SkeletonError {
    SkeletonError::MalformedHierarchy { line, message: message.into() }
}

fn parse_finite(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a complete BVH file.
pub fn parse_bvh(text: &str) -> Result<BvhDocument, SkeletonError> {
    let lines: Vec<&str> = text.lines().collect();
    let motion_idx = lines
        .iter()
        .position(|l| l.trim() == "MOTION")
        .ok_or_else(|| malformed(lines.len().max(1), "missing MOTION section"))?;

    let mut tokens = Tokens {
        items: lines[..motion_idx]
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect(),
        pos: 0,
    };
    tokens.expect("HIERARCHY")?;
    let root_line = tokens.expect("ROOT")?;
    let mut seen = HashSet::new();
    let root = parse_joint(&mut tokens, root_line, false, &mut seen)?;
    if let Some((line, t)) = tokens.next() {
        return Err(malformed(line, format!("unexpected `{t}` after root joint (only one ROOT is supported)")));
    }

    // MOTION header: "Frames: N" then "Frame Time: t".
    let mut rest = lines.iter().enumerate().skip(motion_idx + 1).filter(|(_, l)| !l.trim().is_empty());
    let (frames_line, frames_text) = rest
        .next()
        .ok_or_else(|| motion_err(motion_idx + 1, "missing `Frames:` line"))?;
    let frame_count = frames_text
        .trim()
        .strip_prefix("Frames:")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| motion_err(frames_line + 1, format!("expected `Frames: <count>`, found `{}`", frames_text.trim())))?;
    let (time_line, time_text) = rest
        .next()
        .ok_or_else(|| motion_err(frames_line + 1, "missing `Frame Time:` line"))?;
    let frame_time = time_text
        .trim()
        .strip_prefix("Frame Time:")
        .and_then(|v| parse_finite(v.trim()))
        .filter(|&v| v > 0.0)
        .ok_or_else(|| motion_err(time_line + 1, format!("expected `Frame Time: <seconds>`, found `{}`", time_text.trim())))?;

    let width = root.total_channels();
    if width == 0 {
        return Err(malformed(root_line, "hierarchy declares no channels"));
    }
    let mut motion = Vec::with_capacity(frame_count * width);
    let mut rows = 0;
    for (idx, line) in rest {
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != width {
            return Err(SkeletonError::MotionWidthMismatch { line: idx + 1, expected: width, found: values.len() });
        }
        for v in values {
            motion.push(parse_finite(v).ok_or_else(|| motion_err(idx + 1, format!("bad value `{v}`")))?);
        }
        rows += 1;
    }
    if rows != frame_count {
        return Err(SkeletonError::FrameCountMismatch { declared: frame_count, found: rows });
    }
    if frame_count == 0 {
        return Err(SkeletonError::EmptySequence);
    }
    Ok(BvhDocument { root, frame_count, frame_time, motion })
}

fn motion_err(line: usize, message: impl Into<String>) -> SkeletonError {
    SkeletonError::MalformedMotion { line, message: message.into() }
}

fn parse_joint(
    tokens: &mut Tokens<'_>,
    header_line: usize,
    is_end_site: bool,
    seen: &mut HashSet<String>,
) -> Result<JointNode, SkeletonError> {
    let name = if is_end_site { String::new() } else { tokens.rest_of_line(header_line) };
    if !is_end_site && name.is_empty() {
        return Err(malformed(header_line, "joint without a name"));
    }
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let offset = Vec3::new(tokens.number()?, tokens.number()?, tokens.number()?);
    let mut node = JointNode { name, offset, channels: Vec::new(), children: Vec::new(), is_end_site };
    if is_end_site {
        tokens.expect("}")?;
        return Ok(node);
    }
    if !seen.insert(node.name.clone()) {
        return Err(malformed(header_line, format!("duplicate joint name `{}`", node.name)));
    }

    let count_line = tokens.expect("CHANNELS")?;
    let count = tokens.number()?;
    if ![0.0, 3.0, 6.0].contains(&count) {
        return Err(malformed(count_line, format!("channel count must be 0, 3 or 6, found {count}")));
    }
    for _ in 0..count as usize {
        let (line, t) = tokens.next().ok_or_else(|| malformed(count_line, "truncated CHANNELS list"))?;
        node.channels.push(t.parse().map_err(|_| malformed(line, format!("unknown channel `{t}`")))?);
    }

    loop {
        match tokens.next() {
            Some((line, "JOINT")) => node.children.push(parse_joint(tokens, line, false, seen)?),
            Some((line, "End")) => {
                tokens.expect("Site")?;
                let mut end = parse_joint(tokens, line, true, seen)?;
                end.name = format!("{}_end", node.name);
                if !seen.insert(end.name.clone()) {
                    return Err(malformed(line, format!("duplicate joint name `{}`", end.name)));
                }
                node.children.push(end);
            }
            Some((_, "}")) => return Ok(node),
            Some((line, t)) => return Err(malformed(line, format!("unexpected `{t}` in joint `{}`", node.name))),
            None => return Err(malformed(tokens.last_line(), format!("unbalanced braces: joint `{}` never closed", node.name))),
        }
    }
}

/// Write a document back to BVH text. Values use Rust's shortest
/// round-tripping decimal form, so re-parsing is bit-exact.
pub fn serialize_bvh(doc: &BvhDocument) -> String {
    let mut out = String::from("HIERARCHY\n");
    write_joint(&mut out, &doc.root, 0, true);
    let _ = writeln!(out, "MOTION\nFrames: {}\nFrame Time: {}", doc.frame_count, doc.frame_time);
    let width = doc.channel_count().max(1);
    for row in doc.motion.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(out: &mut String, node: &JointNode, depth: usize, is_root: bool) {
    let pad = "\t".repeat(depth);
    if node.is_end_site {
        out.push_str(&format!("{pad}End Site\n"));
    } else {
        let kw = if is_root { "ROOT" } else { "JOINT" };
        out.push_str(&format!("{pad}{kw} {}\n", node.name));
    }
    out.push_str(&format!("{pad}{{\n"));
    let o = node.offset;
    out.push_str(&format!("{pad}\tOFFSET {} {} {}\n", o.x(), o.y(), o.z()));
    if !node.is_end_site {
        let names: Vec<&str> = node.channels.iter().map(|c| c.as_str()).collect();
        let sep = if names.is_empty() { "" } else { " " };
        out.push_str(&format!("{pad}\tCHANNELS {}{sep}{}\n", names.len(), names.join(" ")));
    }
    for c in &node.children {
        write_joint(out, c, depth + 1, false);
    }
    out.push_str(&format!("{pad}}}\n"));
}
