use crate::config::{label_spec, Settings};
use crate::timeline::Timeline;
use anyhow::{anyhow, bail, Context, Result};
use ergoseg::features::{make_splits, read_features, read_next, synth_generate, Dataset, FeatureSequence, SplitSpec, SynthConfig};
use ergoseg::labels::{attach_risk, parse_annotations, to_frame_labels, AnnotationTrack, LabelSet};
use ergoseg::metrics::{evaluate, report_table, EvalReport, SegmentCounts};
use ergoseg::par::{self, Execution};
use ergoseg::reba::RiskCategory;
use ergoseg::tcn::{
    load_model, predict, predict_windowed, save_model, train, ArchConfig, ArchTag, FilterDuration, ModelParams,
    StreamingPredictor, DEFAULT_WINDOW,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub videos: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Mean segment length in frames.
    #[arg(long)]
    pub mean_segment: Option<f64>,
    /// Standard deviation of the per-frame noise.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub labels: Option<String>,
    /// Split file from `ergoseg split`; trains every split unless `--split` picks one.
    #[arg(long, value_name = "PATH")]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// ED-TCN filter duration in seconds, or `shortest_class`.
    #[arg(long)]
    pub filter_duration: Option<String>,
    /// Checkpoint file, or a directory of `split<k>.tcnm` when training every split.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    /// Checkpoint, or a directory of per-split checkpoints with `--splits`.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature files to segment.
    pub inputs: Vec<PathBuf>,
    /// With `--splits`: predict every split's test videos.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<String>,
    /// Write `<video>.ann` files here (split mode: `split<k>/<video>.ann`).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct StreamArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub labels: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory written by `predict`.
    #[arg(long, value_name = "DIR")]
    pub predictions: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub labels: Option<String>,
    /// `action,score,category` file from `reba aggregate`; adds a risk bar.
    #[arg(long, value_name = "PATH")]
    pub risk: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn dataset_labels(settings: &Settings, flag: Option<&str>, manifest: &Path) -> Result<LabelSet> {
    settings
        .labels(flag, Some(manifest))?
        .ok_or_else(|| anyhow!("no label set: pass --labels or put labels.txt next to {}", manifest.display()))
}

fn load_dataset(settings: &Settings, flag: Option<&str>, manifest: &Path) -> Result<Dataset> {
    let labels = dataset_labels(settings, flag, manifest)?;
    Dataset::load(manifest, labels).with_context(|| manifest.display().to_string())
}

fn load_splits(path: &Path) -> Result<SplitSpec> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    SplitSpec::parse(&text).with_context(|| path.display().to_string())
}

pub fn synth(args: &SynthArgs, settings: &Settings) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n_videos: args.videos.or(settings.parse("synth", "videos")?).unwrap_or(d.n_videos),
        n_classes: args.classes.or(settings.parse("synth", "classes")?).unwrap_or(d.n_classes),
        dims: args.dims.or(settings.parse("synth", "dims")?).unwrap_or(d.dims),
        fps: args.fps.or(settings.parse("synth", "fps")?).unwrap_or(d.fps),
        mean_segment_frames: args.mean_segment.or(settings.parse("synth", "mean_segment")?).unwrap_or(d.mean_segment_frames),
        noise_sigma: args.sigma.or(settings.parse("synth", "sigma")?).unwrap_or(d.noise_sigma),
        frames_per_video: args.frames.or(settings.parse("synth", "frames")?).unwrap_or(d.frames_per_video),
        seed: settings.seed()?,
    };
    let data = synth_generate(&cfg)?;
    let manifest = data.save(&args.out)?;
    println!("{}", manifest.display());
    Ok(())
}

pub fn split(args: &SplitArgs, settings: &Settings) -> Result<()> {
    let data = load_dataset(settings, args.labels.as_deref(), &args.manifest)?;
    let spec = make_splits(&data.video_ids(), args.splits, args.test_fraction, settings.seed()?)?;
    let text = spec.to_text();
    match &args.out {
        Some(p) => fs::write(p, text).with_context(|| p.display().to_string())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn arch_config(args: &TrainArgs, settings: &Settings) -> Result<ArchConfig> {
    let flag = settings.global.arch;
    let mut cfg = if settings.file.section("model").next().is_some() {
        ArchConfig::from_keyval(&settings.file, "model", flag)?
    } else {
        ArchConfig::default_for(flag.unwrap_or(ArchTag::EdTcn))
    };
    if let Some(e) = args.epochs {
        cfg.set_epochs(e);
    }
    if let Some(lr) = args.lr {
        cfg.set_learning_rate(lr);
    }
    if let (Some(v), ArchConfig::EdTcn(c)) = (&args.filter_duration, &mut cfg) {
        c.filter_duration = if v == "shortest_class" {
            FilterDuration::ShortestClassMean
        } else {
            FilterDuration::Seconds(v.parse().map_err(|_| anyhow!("--filter-duration `{v}`"))?)
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_model(params: &ModelParams, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(path).with_context(|| path.display().to_string())?;
    save_model(params, io::BufWriter::new(file))?;
    Ok(())
}

pub fn split_model_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("split{k}.tcnm"))
}

pub fn train_cmd(args: &TrainArgs, settings: &Settings) -> Result<()> {
    let data = load_dataset(settings, args.labels.as_deref(), &args.manifest)?;
    let config = arch_config(args, settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed()?);

    // (train ids, output path) per model to fit.
    let mut jobs: Vec<(Vec<String>, PathBuf)> = Vec::new();
    match (&args.splits, args.split) {
        (None, Some(_)) => bail!("--split needs --splits"),
        (None, None) => jobs.push((data.video_ids(), args.out.clone())),
        (Some(p), Some(k)) => {
            let spec = load_splits(p)?;
            let s = spec.splits.get(k).ok_or_else(|| anyhow!("{} has no split {k}", p.display()))?;
            jobs.push((s.train.clone(), args.out.clone()));
        }
        (Some(p), None) => {
            for (k, s) in load_splits(p)?.splits.iter().enumerate() {
                jobs.push((s.train.clone(), split_model_path(&args.out, k)));
            }
        }
    }
    let seeded: Vec<_> = jobs.into_iter().map(|(ids, path)| (ids, path, rng.random::<u64>())).collect();
    let results = par::try_map(Execution::default(), &seeded, |(ids, path, seed)| -> Result<String> {
        let subset = data.subset(ids)?;
        let (params, report) = train(&subset, &config, *seed, None)?;
        write_model(&params, path)?;
        Ok(format!(
            "{}: {} epochs, final loss {:.4}, train accuracy {:.2}, {:.1}s",
            path.display(),
            report.epoch_loss.len(),
            report.epoch_loss.last().copied().unwrap_or(f64::NAN),
            report.train_accuracy.last().copied().unwrap_or(f64::NAN),
            report.seconds
        ))
    })?;
    for line in results {
        eprintln!("{line}");
    }
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelParams> {
    let file = fs::File::open(path).with_context(|| path.display().to_string())?;
    load_model(BufReader::new(file)).with_context(|| path.display().to_string())
}

fn run_predict(params: &ModelParams, seq: &FeatureSequence, window: Option<usize>) -> Result<Vec<usize>> {
    Ok(match window {
        Some(w) => predict_windowed(params, seq, w)?,
        None => predict(params, seq)?,
    })
}

fn track_text(pred: &[usize], labels: &LabelSet) -> Result<String> {
    Ok(AnnotationTrack::from_frame_labels(pred)?.to_text(labels))
}

fn model_labels(settings: &Settings, flag: Option<&str>, near: Option<&Path>, params: &ModelParams) -> Result<LabelSet> {
    let labels = settings.labels(flag, near)?.unwrap_or_else(|| LabelSet::numbered(params.n_classes));
    if labels.len() != params.n_classes {
        bail!("label set has {} labels but the model predicts {} classes", labels.len(), params.n_classes);
    }
    Ok(labels)
}

pub fn predict_cmd(args: &PredictArgs, settings: &Settings) -> Result<()> {
    let window = settings.window()?;
    if let Some(splits) = &args.splits {
        let manifest = args.manifest.as_ref().ok_or_else(|| anyhow!("--splits needs --manifest"))?;
        let out = args.out_dir.as_ref().ok_or_else(|| anyhow!("--splits needs --out-dir"))?;
        let data = load_dataset(settings, args.labels.as_deref(), manifest)?;
        for (k, s) in load_splits(splits)?.splits.iter().enumerate() {
            let params = read_model(&split_model_path(&args.model, k))?;
            let dir = out.join(format!("split{k}"));
            fs::create_dir_all(&dir)?;
            for id in &s.test {
                let v = data.get(id).ok_or_else(|| anyhow!("split {k} names unknown video `{id}`"))?;
                let pred = run_predict(&params, &v.features, window)?;
                fs::write(dir.join(format!("{id}.ann")), track_text(&pred, &data.label_set)?)?;
            }
        }
        return Ok(());
    }

    if args.inputs.is_empty() {
        bail!("no feature files given");
    }
    if args.out_dir.is_none() && args.inputs.len() > 1 {
        bail!("several inputs need --out-dir");
    }
    let params = read_model(&args.model)?;
    let labels = model_labels(settings, args.labels.as_deref(), args.manifest.as_deref(), &params)?;
    for path in &args.inputs {
        let name = path.display().to_string();
        let file = fs::File::open(path).with_context(|| name.clone())?;
        let seq = read_features(BufReader::new(file)).with_context(|| name.clone())?;
        let text = track_text(&run_predict(&params, &seq, window).with_context(|| name.clone())?, &labels)?;
        match &args.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("{}.ann", seq.video_id)), text)?;
            }
            None => print!("{text}"),
        }
    }
    Ok(())
}

/// Reads FSEQ chunks from stdin until EOF and prints `frame,label` lines
/// as soon as each window completes.
pub fn stream(args: &StreamArgs, settings: &Settings) -> Result<()> {
    let params = read_model(&args.model)?;
    let labels = model_labels(settings, args.labels.as_deref(), None, &params)?;
    let window = settings.window()?.unwrap_or(DEFAULT_WINDOW);
    let mut sp = StreamingPredictor::new(&params, window)?;
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut frame = 0usize;
    let mut emit = |pred: Vec<usize>, out: &mut io::StdoutLock| -> Result<()> {
        for c in pred {
            writeln!(out, "{frame},{}", labels.name(c))?;
            frame += 1;
        }
        out.flush()?;
        Ok(())
    };
    let mut chunk = 0usize;
    while let Some(seq) = read_next(&mut input).with_context(|| format!("stdin chunk {chunk}"))? {
        emit(sp.push_sequence(&seq).with_context(|| format!("stdin chunk {chunk}"))?, &mut out)?;
        chunk += 1;
    }
    emit(sp.finish()?, &mut out)?;
    Ok(())
}

fn read_track(path: &Path, labels: &LabelSet, total: Option<usize>) -> Result<Vec<usize>> {
    let file = fs::File::open(path).with_context(|| path.display().to_string())?;
    let track = parse_annotations(file, labels, total).with_context(|| path.display().to_string())?;
    Ok(to_frame_labels(&track))
}

/// Per-video scores averaged into one row; counts are summed.
fn mean_report(reports: &[EvalReport]) -> EvalReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let classes = reports.iter().map(|r| r.per_class.len()).max().unwrap_or(0);
    let per_class = (0..classes)
        .map(|c| {
            reports.iter().filter_map(|r| r.per_class.get(c)).fold(SegmentCounts::default(), |a, b| SegmentCounts {
                tp: a.tp + b.tp,
                fp: a.fp + b.fp,
                fn_: a.fn_ + b.fn_,
            })
        })
        .collect();
    EvalReport {
        accuracy: avg(|r| r.accuracy),
        edit_score: avg(|r| r.edit_score),
        f1_overlap: avg(|r| r.f1_overlap),
        tau: reports.first().map_or(0.0, |r| r.tau),
        per_class,
        n_frames: reports.iter().map(|r| r.n_frames).sum(),
        n_segments_pred: reports.iter().map(|r| r.n_segments_pred).sum(),
        n_segments_true: reports.iter().map(|r| r.n_segments_true).sum(),
    }
}

pub fn eval(args: &EvalArgs, settings: &Settings) -> Result<()> {
    let data = load_dataset(settings, args.labels.as_deref(), &args.manifest)?;
    let tau = settings.tau()?;
    let score = |id: &str, dir: &Path| -> Result<EvalReport> {
        let v = data.get(id).ok_or_else(|| anyhow!("unknown video `{id}`"))?;
        let pred = read_track(&dir.join(format!("{id}.ann")), &data.label_set, Some(v.labels.len()))?;
        Ok(evaluate(&pred, &v.labels, tau)?)
    };
    let mut rows = Vec::new();
    match &args.splits {
        Some(p) => {
            for (k, s) in load_splits(p)?.splits.iter().enumerate() {
                let dir = args.predictions.join(format!("split{k}"));
                let reports = s.test.iter().map(|id| score(id, &dir)).collect::<Result<Vec<_>>>()?;
                rows.push((format!("split{k}"), mean_report(&reports)));
            }
        }
        None => {
            for id in data.video_ids() {
                rows.push((id.clone(), score(&id, &args.predictions)?));
            }
        }
    }
    let table = report_table(&rows);
    match &args.out {
        Some(p) => fs::write(p, table).with_context(|| p.display().to_string())?,
        None => print!("{table}"),
    }
    Ok(())
}

fn read_risk(path: &Path, labels: &LabelSet) -> Result<Vec<RiskCategory>> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let row = line.trim();
        if row.is_empty() || row.starts_with("action,") {
            continue;
        }
        let cols: Vec<&str> = row.rsplitn(3, ',').collect();
        if cols.len() != 3 {
            bail!("{} line {}: expected `action,score,category`", path.display(), i + 1);
        }
        let cat: RiskCategory =
            cols[0].trim().parse().map_err(|_| anyhow!("{} line {}: bad category `{}`", path.display(), i + 1, cols[0]))?;
        map.insert(cols[2].trim().to_string(), cat);
    }
    Ok(attach_risk(labels, &map)?)
}

pub fn report(args: &ReportArgs, settings: &Settings) -> Result<()> {
    let labels = match settings.labels(args.labels.as_deref(), Some(&args.truth))? {
        Some(l) => l,
        None => label_spec("uw_iom17")?,
    };
    let truth = read_track(&args.truth, &labels, None)?;
    let pred = read_track(&args.pred, &labels, None)?;
    if truth.len() != pred.len() {
        bail!("truth has {} frames but prediction has {}", truth.len(), pred.len());
    }
    let risk = args.risk.as_deref().map(|p| read_risk(p, &labels)).transpose()?;
    let name = |c: usize| labels.name(c).to_string();
    let svg = Timeline::new(&truth, &pred, &name, risk.as_deref()).to_svg();
    fs::write(&args.out, svg).with_context(|| args.out.display().to_string())?;
    Ok(())
}
