//! Settings resolution: command-line flags win over the config file, which
//! wins over built-in defaults.

use anyhow::{anyhow, bail, Context, Result};
use ergoseg::keyval::KeyValFile;
use ergoseg::labels::LabelSet;
use ergoseg::metrics::DEFAULT_TAU;
use ergoseg::reba::{Adjustments, RebaTables, Thresholds};
use ergoseg::tcn::ArchTag;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub const TABLES_ENV: &str = "ERGOSEG_TABLES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scheme {
    Median,
    #[value(name = "resample_max")]
    ResampleMax,
}

/// Options accepted by every command.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Global {
    /// Sectioned `key = value` config file; flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; required by synth, split and train.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// IoU threshold for the segmental F1 score.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub scheme: Option<Scheme>,
    /// Model architecture: ed_tcn, d_tcn or framewise.
    #[arg(long, global = true, value_parser = parse_arch)]
    pub arch: Option<ArchTag>,
    /// Frames per inference window.
    #[arg(long, global = true)]
    pub window: Option<usize>,
}

fn parse_arch(s: &str) -> Result<ArchTag, String> {
    ArchTag::parse(s).ok_or_else(|| format!("expected ed_tcn, d_tcn or framewise, found `{s}`"))
}

pub struct Settings {
    pub global: Global,
    pub file: KeyValFile,
    base: PathBuf,
}

impl Settings {
    pub fn load(global: Global) -> Result<Self> {
        let (file, base) = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
                let file = KeyValFile::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
                (file, path.parent().unwrap_or(Path::new(".")).to_path_buf())
            }
            None => (KeyValFile::default(), PathBuf::from(".")),
        };
        Ok(Self { global, file, base })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.file.get(section, key)
    }

    pub fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.get(section, key)
            .map(|v| v.parse::<T>().map_err(|_| anyhow!("config [{section}] {key} = `{v}` is not valid")))
            .transpose()
    }

    /// Relative paths in the config file are taken from its directory.
    pub fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get(section, key).map(|p| self.base.join(p))
    }

    pub fn seed(&self) -> Result<u64> {
        match self.global.seed {
            Some(s) => Ok(s),
            None => self.parse("run", "seed")?.ok_or_else(|| anyhow!("a seed is required (--seed or [run] seed)")),
        }
    }

    pub fn tau(&self) -> Result<f64> {
        let tau = match self.global.tau {
            Some(t) => t,
            None => self.parse("run", "tau")?.unwrap_or(DEFAULT_TAU),
        };
        if !(0.0..=1.0).contains(&tau) {
            bail!("tau must lie in [0, 1], found {tau}");
        }
        Ok(tau)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        if let Some(s) = self.global.scheme {
            return Ok(s);
        }
        match self.get("reba", "scheme") {
            None | Some("median") => Ok(Scheme::Median),
            Some("resample_max") => Ok(Scheme::ResampleMax),
            Some(other) => bail!("config [reba] scheme = `{other}`: expected median or resample_max"),
        }
    }

    pub fn window(&self) -> Result<Option<usize>> {
        match self.global.window {
            Some(w) => Ok(Some(w)),
            None => self.parse("run", "window"),
        }
    }

    pub fn thresholds(&self, zero: Option<f64>, binary: Option<f64>, abduction: Option<f64>) -> Result<Thresholds> {
        let d = Thresholds::default();
        let pick = |flag: Option<f64>, key: &str, default: f64| -> Result<f64> {
            Ok(match flag {
                Some(v) => v,
                None => self.parse("reba", key)?.unwrap_or(default),
            })
        };
        Ok(Thresholds::new(
            pick(zero, "zero_threshold", d.zero)?,
            pick(binary, "binary_threshold", d.binary)?,
            pick(abduction, "abduction_threshold", d.abduction)?,
        )?)
    }

    /// `--tables`, then `$ERGOSEG_TABLES`, then `[reba] tables`, then the
    /// built-in worksheet tables.
    pub fn tables(&self, flag: Option<&Path>) -> Result<RebaTables> {
        let path = flag
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(TABLES_ENV).map(PathBuf::from))
            .or_else(|| self.path("reba", "tables"));
        match path {
            None => Ok(RebaTables::default()),
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("{}", p.display()))?;
                RebaTables::parse(&text).with_context(|| format!("{}", p.display()))
            }
        }
    }

    /// Default adjustments from `[reba]`, overridden per action by
    /// `[adjust.<label>]` sections.
    pub fn adjustments(&self, flags: [Option<u8>; 3]) -> Result<(Adjustments, HashMap<String, Adjustments>)> {
        let keys = ["load", "coupling", "activity"];
        let read = |section: &str, base: Adjustments| -> Result<Adjustments> {
            let mut v = [base.load_score, base.coupling_score, base.activity_score];
            for (slot, key) in v.iter_mut().zip(keys) {
                if let Some(x) = self.parse::<u8>(section, key)? {
                    *slot = x;
                }
            }
            Ok(Adjustments::new(v[0], v[1], v[2])?)
        };
        let mut base = read("reba", Adjustments::default())?;
        let mut v = [base.load_score, base.coupling_score, base.activity_score];
        for (slot, f) in v.iter_mut().zip(flags) {
            if let Some(x) = f {
                *slot = x;
            }
        }
        base = Adjustments::new(v[0], v[1], v[2])?;
        let mut per_action = HashMap::new();
        for section in self.file.sections() {
            if let Some(label) = section.strip_prefix("adjust.") {
                per_action.insert(label.to_string(), read(section, base)?);
            }
        }
        Ok((base, per_action))
    }

    /// Label set from a flag or `[data] labels`, falling back to
    /// `labels.txt` next to `near` (a manifest).
    pub fn labels(&self, flag: Option<&str>, near: Option<&Path>) -> Result<Option<LabelSet>> {
        if let Some(spec) = flag {
            return label_spec(spec).map(Some);
        }
        if let Some(p) = self.path("data", "labels") {
            return label_spec(&p.to_string_lossy()).map(Some);
        }
        if let Some(dir) = near.and_then(Path::parent) {
            let p = dir.join("labels.txt");
            if p.exists() {
                return label_spec(&p.to_string_lossy()).map(Some);
            }
        }
        Ok(None)
    }
}

/// `uw_iom17`, `tum21`, `numbered:N` or a label file.
pub fn label_spec(spec: &str) -> Result<LabelSet> {
    match spec {
        "uw_iom17" => Ok(LabelSet::uw_iom17()),
        "tum21" => Ok(LabelSet::tum21()),
        s => {
            if let Some(n) = s.strip_prefix("numbered:") {
                let n: usize = n.parse().map_err(|_| anyhow!("bad label count in `{s}`"))?;
                return Ok(LabelSet::numbered(n));
            }
            let text = std::fs::read_to_string(s).with_context(|| s.to_string())?;
            LabelSet::parse(&text).with_context(|| s.to_string())
        }
    }
}
