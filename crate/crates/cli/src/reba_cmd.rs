use crate::config::{label_spec, Scheme, Settings};
use anyhow::{anyhow, bail, Context, Result};
use ergoseg::kinematics::sequence_angles;
use ergoseg::labels::{parse_annotations, to_frame_labels, LabelSet};
use ergoseg::par::Execution;
use ergoseg::reba::{aggregate_median, aggregate_resample_max, risk_category, ActionRisk, Adjustments, Scorer, ScoredVideo};
use ergoseg::skeleton::{forward_kinematics, parse_bvh, read_joint_table, JointLayout, SkeletonSequence, TableOptions};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, clap::Args)]
pub struct ScoreArgs {
    /// Skeleton files: `.bvh`, or comma/tab-separated joint tables.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Joint layout: kinect25 or tum33 (default: tum33 for BVH, kinect25 otherwise).
    #[arg(long)]
    pub layout: Option<String>,
    /// Role-map file applied on top of the layout.
    #[arg(long, value_name = "PATH")]
    pub roles: Option<PathBuf>,
    /// Frame rate of joint tables.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Joint tables start with a header row.
    #[arg(long)]
    pub header: bool,
    /// Annotation files, one per input in the same order; enables the
    /// per-action `[adjust.<label>]` config sections.
    #[arg(long, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    #[arg(long)]
    pub labels: Option<String>,
    /// REBA table file (overrides $ERGOSEG_TABLES).
    #[arg(long, value_name = "PATH")]
    pub tables: Option<PathBuf>,
    #[arg(long)]
    pub zero_threshold: Option<f64>,
    #[arg(long)]
    pub binary_threshold: Option<f64>,
    #[arg(long)]
    pub abduction_threshold: Option<f64>,
    #[arg(long)]
    pub load: Option<u8>,
    #[arg(long)]
    pub coupling: Option<u8>,
    #[arg(long)]
    pub activity: Option<u8>,
    /// Write `<name>.scores.csv` per input here instead of to stdout.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AggregateArgs {
    /// Per-frame score files written by `reba score`.
    #[arg(long, required = true, num_args = 1..)]
    pub scores: Vec<PathBuf>,
    /// `start,end,label` files; matched to score files by video id.
    #[arg(long, required = true, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// Participant of each score file, in order (default: one per video).
    #[arg(long, num_args = 1..)]
    pub participants: Vec<String>,
    /// Label file, or uw_iom17 / tum21 / numbered:N.
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn load_skeleton(path: &Path, args: &ScoreArgs, settings: &Settings) -> Result<(SkeletonSequence, JointLayout)> {
    let text = fs::read_to_string(path)?;
    let is_bvh = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bvh"));
    let layout_name = args
        .layout
        .clone()
        .or_else(|| settings.get("skeleton", "layout").map(String::from))
        .unwrap_or_else(|| if is_bvh { "tum33" } else { "kinect25" }.to_string());
    let mut layout = JointLayout::by_name(&layout_name).ok_or_else(|| anyhow!("unknown layout `{layout_name}`"))?;
    if let Some(roles) = args.roles.clone().or_else(|| settings.path("skeleton", "roles")) {
        let text = fs::read_to_string(&roles).with_context(|| roles.display().to_string())?;
        layout = layout.with_overrides(&text).with_context(|| roles.display().to_string())?;
    }
    let seq = if is_bvh {
        forward_kinematics(&parse_bvh(&text)?)
    } else {
        let mut opts = TableOptions { has_header: args.header, ..Default::default() };
        if let Some(fps) = args.fps.or(settings.parse("skeleton", "fps")?) {
            opts.fps = fps;
        }
        read_joint_table(text.as_bytes(), &layout, &opts)?
    };
    Ok((seq, layout))
}

fn video_id(path: &Path, suffixes: &[&str]) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for s in suffixes {
        if let Some(stem) = name.strip_suffix(s) {
            return stem.to_string();
        }
    }
    path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or(name)
}

pub fn score(args: &ScoreArgs, settings: &Settings) -> Result<()> {
    if args.out_dir.is_none() && args.inputs.len() > 1 {
        bail!("several inputs need --out-dir");
    }
    if !args.annotations.is_empty() && args.annotations.len() != args.inputs.len() {
        bail!("{} annotation files for {} inputs", args.annotations.len(), args.inputs.len());
    }
    let scorer = Scorer {
        thresholds: settings.thresholds(args.zero_threshold, args.binary_threshold, args.abduction_threshold)?,
        tables: settings.tables(args.tables.as_deref())?,
    };
    let (base, per_action) = settings.adjustments([args.load, args.coupling, args.activity])?;
    let labels = if args.annotations.is_empty() { None } else { settings.labels(args.labels.as_deref(), None)? };
    if !args.annotations.is_empty() && labels.is_none() {
        bail!("--annotations needs --labels");
    }

    for (i, path) in args.inputs.iter().enumerate() {
        let name = path.display().to_string();
        let (seq, layout) = load_skeleton(path, args, settings).with_context(|| name.clone())?;
        let angles = sequence_angles(&seq, &layout, Execution::default()).with_context(|| name.clone())?;
        let frame_adj: Vec<Adjustments> = match (&labels, args.annotations.get(i)) {
            (Some(ls), Some(ann)) => {
                let track = parse_annotations(fs::File::open(ann)?, ls, Some(angles.len()))
                    .with_context(|| ann.display().to_string())?;
                to_frame_labels(&track).iter().map(|&c| *per_action.get(ls.name(c)).unwrap_or(&base)).collect()
            }
            _ => vec![base; angles.len()],
        };
        let scores = scorer.score_sequence(&angles, |f| frame_adj[f], Execution::default());
        let mut out = String::from("frame,score,category\n");
        for (f, s) in scores.iter().enumerate() {
            out.push_str(&format!("{f},{},{}\n", s.value, risk_category(f64::from(s.value)).as_str()));
        }
        match &args.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let target = dir.join(format!("{}.scores.csv", video_id(path, &[])));
                fs::write(&target, out).with_context(|| target.display().to_string())?;
            }
            None => print!("{out}"),
        }
    }
    Ok(())
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = line.trim();
        if row.is_empty() || row.starts_with("frame") {
            continue;
        }
        let v = row
            .split(',')
            .nth(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| anyhow!("line {}: expected `frame,score,category`", i + 1))?;
        scores.push(v);
    }
    Ok(scores)
}

pub fn aggregate(args: &AggregateArgs, settings: &Settings) -> Result<()> {
    let labels: LabelSet = match settings.labels(args.labels.as_deref(), None)? {
        Some(l) => l,
        None => label_spec("uw_iom17")?,
    };
    if !args.participants.is_empty() && args.participants.len() != args.scores.len() {
        bail!("{} participants for {} score files", args.participants.len(), args.scores.len());
    }
    let mut annotations: BTreeMap<String, &PathBuf> = BTreeMap::new();
    for a in &args.annotations {
        if annotations.insert(video_id(a, &[".ann"]), a).is_some() {
            bail!("video id `{}` appears in two annotation files", video_id(a, &[".ann"]));
        }
    }
    let mut videos = Vec::new();
    let mut seen = Vec::new();
    for (i, s) in args.scores.iter().enumerate() {
        let id = video_id(s, &[".scores.csv"]);
        let ann = annotations.get(&id).ok_or_else(|| anyhow!("no annotation file for video `{id}` ({})", s.display()))?;
        let scores = read_scores(s).with_context(|| s.display().to_string())?;
        let track = parse_annotations(fs::File::open(ann)?, &labels, Some(scores.len()))
            .with_context(|| ann.display().to_string())?;
        let participant = args.participants.get(i).cloned().unwrap_or_else(|| id.clone());
        videos.push(ScoredVideo { participant, scores, labels: to_frame_labels(&track) });
        seen.push(id);
    }
    if let Some(extra) = annotations.keys().find(|k| !seen.contains(k)) {
        bail!("annotation file for video `{extra}` has no score file");
    }
    let risks: Vec<ActionRisk> = match settings.scheme()? {
        Scheme::Median => aggregate_median(&videos, &labels)?,
        Scheme::ResampleMax => aggregate_resample_max(&videos, &labels)?,
    };
    let mut out = String::from("action,score,category\n");
    for r in &risks {
        out.push_str(&format!("{},{:.2},{}\n", r.name, r.score, r.category.as_str()));
    }
    match &args.out {
        Some(p) => fs::write(p, out).with_context(|| p.display().to_string())?,
        None => print!("{out}"),
    }
    Ok(())
}
