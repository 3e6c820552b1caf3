//! Per-frame feature sequences, the FSEQ container, train/test splits and
//! synthetic datasets.
//!
//! FSEQ layout (little-endian): `b"FSEQ"`, version `u32`, fps `f64`,
//! frames `u64`, dims `u64`, `frames * dims` row-major `f64` values, then a
//! `u64` byte length followed by the UTF-8 video id.

use crate::keyval::KeyValFile;
use crate::labels::{parse_annotations, to_frame_labels, AnnotationTrack, LabelError, LabelSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FSEQ_MAGIC: [u8; 4] = *b"FSEQ";
pub const FSEQ_VERSION: u32 = 1;

/// Shortest segment produced by the synthetic generator.
pub const MIN_SEGMENT_FRAMES: usize = 5;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("not an FSEQ stream")]
    BadMagic,
    #[error("FSEQ version {0} is not supported")]
    VersionUnsupported(u32),
    #[error("FSEQ payload is truncated")]
    TruncatedPayload,
    #[error("invalid feature sequence: {0}")]
    Invalid(String),
    #[error("need at least 2 videos to split, found {found}")]
    TooFewVideos { found: usize },
    #[error("{path}: {source}")]
    Label { path: String, source: LabelError },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

/// A `frames x dims` matrix of per-frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    pub fps: f64,
    pub dims: usize,
    /// Row-major, `frames * dims` values.
    pub data: Vec<f64>,
}

impl FeatureSequence {
    pub fn new(video_id: impl Into<String>, fps: f64, dims: usize, data: Vec<f64>) -> Result<Self, FeatureError> {
        let s = Self { video_id: video_id.into(), fps, dims, data };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.dims == 0 {
            return Err(FeatureError::Invalid("zero feature dimensions".into()));
        }
        if self.data.is_empty() || self.data.len() % self.dims != 0 {
            return Err(FeatureError::Invalid(format!(
                "{} values do not form whole frames of {} dims",
                self.data.len(),
                self.dims
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(FeatureError::Invalid(format!("fps {} must be positive", self.fps)));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::Invalid(format!(
                "non-finite value at frame {}, dim {}",
                i / self.dims,
                i % self.dims
            )));
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    /// Frames `start..end` as a new sequence with the same id and fps.
    pub fn slice(&self, start: usize, end: usize) -> FeatureSequence {
        FeatureSequence {
            video_id: self.video_id.clone(),
            fps: self.fps,
            dims: self.dims,
            data: self.data[start * self.dims..end * self.dims].to_vec(),
        }
    }
}

pub fn write_features(seq: &FeatureSequence, mut out: impl Write) -> Result<(), FeatureError> {
    seq.validate()?;
    out.write_all(&to_bytes(seq))?;
    Ok(())
}

pub fn to_bytes(seq: &FeatureSequence) -> Vec<u8> {
    let mut buf = Vec::with_capacity(36 + seq.data.len() * 8 + seq.video_id.len());
    buf.extend_from_slice(&FSEQ_MAGIC);
    buf.extend_from_slice(&FSEQ_VERSION.to_le_bytes());
    buf.extend_from_slice(&seq.fps.to_le_bytes());
    buf.extend_from_slice(&(seq.frames() as u64).to_le_bytes());
    buf.extend_from_slice(&(seq.dims as u64).to_le_bytes());
    for v in &seq.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(seq.video_id.len() as u64).to_le_bytes());
    buf.extend_from_slice(seq.video_id.as_bytes());
    buf
}

pub fn read_features(input: impl Read) -> Result<FeatureSequence, FeatureError> {
    read_next(input)?.ok_or(FeatureError::TruncatedPayload)
}

/// Read one FSEQ record; `Ok(None)` on a clean end of stream. Records can
/// be concatenated, which is how streamed chunks are framed.
pub fn read_next(mut input: impl Read) -> Result<Option<FeatureSequence>, FeatureError> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match input.read(&mut magic[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(FeatureError::TruncatedPayload),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if magic != FSEQ_MAGIC {
        return Err(FeatureError::BadMagic);
    }
    let version = u32::from_le_bytes(take(&mut input)?);
    if version != FSEQ_VERSION {
        return Err(FeatureError::VersionUnsupported(version));
    }
    let fps = f64::from_le_bytes(take(&mut input)?);
    let frames = u64::from_le_bytes(take(&mut input)?);
    let dims = u64::from_le_bytes(take(&mut input)?);
    let count = frames
        .checked_mul(dims)
        .and_then(|n| usize::try_from(n).ok())
        .filter(|n| n.checked_mul(8).is_some())
        .ok_or_else(|| FeatureError::Invalid(format!("{frames} x {dims} is too large")))?;
    // Read in bounded pieces so a corrupt header cannot force a huge
    // allocation before the payload runs out.
    let mut data = Vec::new();
    let mut chunk = vec![0u8; 8 * 4096];
    let mut left = count;
    while left > 0 {
        let n = left.min(4096);
        read_exact(&mut input, &mut chunk[..n * 8])?;
        data.extend(chunk[..n * 8].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())));
        left -= n;
    }
    let id_len = usize::try_from(u64::from_le_bytes(take(&mut input)?))
        .map_err(|_| FeatureError::Invalid("video id length overflows".into()))?;
    if id_len > 1 << 20 {
        return Err(FeatureError::Invalid(format!("video id of {id_len} bytes")));
    }
    let mut id = vec![0u8; id_len];
    read_exact(&mut input, &mut id)?;
    let video_id = String::from_utf8(id).map_err(|_| FeatureError::Invalid("video id is not UTF-8".into()))?;
    FeatureSequence::new(video_id, fps, dims as usize, data).map(Some)
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<(), FeatureError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FeatureError::TruncatedPayload,
        _ => FeatureError::Io(e),
    })
}

fn take<const N: usize>(input: &mut impl Read) -> Result<[u8; N], FeatureError> {
    let mut b = [0u8; N];
    read_exact(input, &mut b)?;
    Ok(b)
}

/// A feature sequence with one class id per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVideo {
    pub features: FeatureSequence,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<LabeledVideo>,
    pub label_set: LabelSet,
}

impl Dataset {
    pub fn new(items: Vec<LabeledVideo>, label_set: LabelSet) -> Result<Self, FeatureError> {
        let d = Self { items, label_set };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let dims = self.items.first().map(|v| v.features.dims);
        for v in &self.items {
            let id = &v.features.video_id;
            v.features.validate()?;
            if Some(v.features.dims) != dims {
                return Err(FeatureError::Invalid(format!("{id}: {} dims, expected {}", v.features.dims, dims.unwrap())));
            }
            if v.labels.len() != v.features.frames() {
                return Err(FeatureError::Invalid(format!(
                    "{id}: {} labels for {} frames",
                    v.labels.len(),
                    v.features.frames()
                )));
            }
            if let Some(c) = v.labels.iter().find(|&&c| c >= self.label_set.len()) {
                return Err(FeatureError::Invalid(format!("{id}: class id {c} outside the label set")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Option<usize> {
        self.items.first().map(|v| v.features.dims)
    }

    pub fn video_ids(&self) -> Vec<String> {
        self.items.iter().map(|v| v.features.video_id.clone()).collect()
    }

    pub fn get(&self, video_id: &str) -> Option<&LabeledVideo> {
        self.items.iter().find(|v| v.features.video_id == video_id)
    }

    /// The videos named in `ids`, in that order.
    pub fn subset(&self, ids: &[String]) -> Result<Dataset, FeatureError> {
        let items = ids
            .iter()
            .map(|id| self.get(id).cloned().ok_or_else(|| FeatureError::Invalid(format!("unknown video `{id}`"))))
            .collect::<Result<_, _>>()?;
        Ok(Dataset { items, label_set: self.label_set.clone() })
    }

    /// Write `<id>.fseq` and `<id>.ann` per video plus `labels.txt` and
    /// `manifest.csv` into `dir`. Returns the manifest path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, FeatureError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("labels.txt"), self.label_set.to_text())?;
        let mut manifest = String::new();
        for v in &self.items {
            let id = &v.features.video_id;
            let track = AnnotationTrack::from_frame_labels(&v.labels)
                .map_err(|source| FeatureError::Label { path: id.clone(), source })?;
            write_features(&v.features, fs::File::create(dir.join(format!("{id}.fseq")))?)?;
            fs::write(dir.join(format!("{id}.ann")), track.to_text(&self.label_set))?;
            manifest.push_str(&format!("{id}.fseq,{id}.ann\n"));
        }
        let path = dir.join("manifest.csv");
        fs::write(&path, manifest)?;
        Ok(path)
    }

    /// Load from a manifest of `<features_path>,<annotations_path>` lines.
    /// Relative paths are resolved against the manifest's directory.
    pub fn load(manifest: &Path, label_set: LabelSet) -> Result<Dataset, FeatureError> {
        let base = manifest.parent().unwrap_or(Path::new("."));
        let text = fs::read_to_string(manifest)?;
        let mut items = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') {
                continue;
            }
            let Some((f, a)) = row.split_once(',') else {
                return Err(FeatureError::Manifest {
                    line: i + 1,
                    message: format!("expected `<features>,<annotations>`, found `{row}`"),
                });
            };
            let (fpath, apath) = (base.join(f.trim()), base.join(a.trim()));
            let features = read_features(io::BufReader::new(fs::File::open(&fpath)?))?;
            let ann = fs::File::open(&apath)?;
            let track = parse_annotations(ann, &label_set, Some(features.frames()))
                .map_err(|source| FeatureError::Label { path: apath.display().to_string(), source })?;
            items.push(LabeledVideo { features, labels: to_frame_labels(&track) });
        }
        Dataset::new(items, label_set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl SplitSpec {
    /// `[split.N]` sections with space-separated `train` and `test` ids.
    pub fn to_text(&self) -> String {
        let mut out = format!("seed = {}\n", self.seed);
        for (i, s) in self.splits.iter().enumerate() {
            out.push_str(&format!("\n[split.{i}]\ntrain = {}\ntest = {}\n", s.train.join(" "), s.test.join(" ")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let file = KeyValFile::parse(text).map_err(|e| FeatureError::Manifest { line: e.line, message: e.message })?;
        let seed = file.get("", "seed").and_then(|s| s.parse().ok()).unwrap_or(0);
        let mut splits = Vec::new();
        for i in 0.. {
            let name = format!("split.{i}");
            if file.section(&name).next().is_none() {
                break;
            }
            let ids = |key: &str| -> Vec<String> {
                file.get(&name, key).unwrap_or("").split_whitespace().map(String::from).collect()
            };
            splits.push(Split { train: ids("train"), test: ids("test") });
        }
        Ok(Self { seed, splits })
    }
}

/// `n_splits` independent random train/test partitions. Each split holds
/// `round(test_fraction * n)` test videos, at least 1 and at most `n - 1`.
pub fn make_splits(
    video_ids: &[String],
    n_splits: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitSpec, FeatureError> {
    let n = video_ids.len();
    if n < 2 {
        return Err(FeatureError::TooFewVideos { found: n });
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FeatureError::Invalid(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splits = (0..n_splits)
        .map(|_| {
            let mut ids = video_ids.to_vec();
            ids.shuffle(&mut rng);
            let mut test = ids.split_off(n - n_test);
            ids.sort();
            test.sort();
            Split { train: ids, test }
        })
        .collect();
    Ok(SplitSpec { seed, splits })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_videos: usize,
    pub n_classes: usize,
    pub dims: usize,
    pub fps: f64,
    pub mean_segment_frames: f64,
    pub noise_sigma: f64,
    pub frames_per_video: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_videos: 10,
            n_classes: 5,
            dims: 16,
            fps: 15.0,
            mean_segment_frames: 40.0,
            noise_sigma: 0.25,
            frames_per_video: 400,
            seed: 0,
        }
    }
}

/// Class prototypes drawn for a config; frame features scatter around them.
pub fn synth_prototypes(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    draw_prototypes(cfg, &mut rng)
}

fn draw_prototypes(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..cfg.n_classes).map(|_| (0..cfg.dims).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect()
}

/// Random segment sequences over fixed class prototypes plus Gaussian
/// noise. Segment lengths are `MIN_SEGMENT_FRAMES` plus a geometric draw,
/// giving the requested mean; consecutive segments differ in class.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset, FeatureError> {
    if cfg.n_videos == 0 || cfg.n_classes == 0 || cfg.dims == 0 || cfg.frames_per_video == 0 {
        return Err(FeatureError::Invalid("synthetic sizes must be positive".into()));
    }
    if !(cfg.fps > 0.0 && cfg.mean_segment_frames > 0.0 && cfg.noise_sigma >= 0.0) {
        return Err(FeatureError::Invalid("fps and segment length must be positive, noise non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prototypes = draw_prototypes(cfg, &mut rng);
    let extra = (cfg.mean_segment_frames - MIN_SEGMENT_FRAMES as f64).max(0.0);
    let geometric = Geometric::new(1.0 / (extra + 1.0)).expect("probability in (0, 1]");
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("finite sigma");
    let total = cfg.frames_per_video;

    let mut items = Vec::with_capacity(cfg.n_videos);
    for v in 0..cfg.n_videos {
        let mut labels = Vec::with_capacity(total);
        let mut class = rng.random_range(0..cfg.n_classes);
        while labels.len() < total {
            let mut len = MIN_SEGMENT_FRAMES + geometric.sample(&mut rng) as usize;
            let left = total - labels.len();
            // Never leave a tail shorter than the floor.
            if len >= left || left - len < MIN_SEGMENT_FRAMES || cfg.n_classes == 1 {
                len = left;
            }
            labels.extend(std::iter::repeat_n(class, len));
            if cfg.n_classes > 1 {
                let step = rng.random_range(1..cfg.n_classes);
                class = (class + step) % cfg.n_classes;
            }
        }
        let mut data = Vec::with_capacity(total * cfg.dims);
        for &c in &labels {
            for &p in &prototypes[c] {
                data.push(if cfg.noise_sigma > 0.0 { p + noise.sample(&mut rng) } else { p });
            }
        }
        let features = FeatureSequence { video_id: format!("synth{v:03}"), fps: cfg.fps, dims: cfg.dims, data };
        items.push(LabeledVideo { features, labels });
    }
    Dataset::new(items, LabelSet::numbered(cfg.n_classes))
}
