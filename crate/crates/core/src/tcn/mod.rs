//! Temporal convolutional segmenters: an encoder-decoder TCN, a dilated
//! TCN with gated activations, and a framewise linear-softmax baseline.

mod checkpoint;
mod model;
pub mod ops;
mod optim;
mod stream;
mod train;

pub use checkpoint::{load_model, save_model, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{ModelParams, NamedTensor, Probabilities};
pub use optim::Optimizer;
pub use stream::{predict_windowed, StreamingPredictor, DEFAULT_WINDOW};
pub use train::{predict, train, TrainReport};

use crate::keyval::KeyValFile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TcnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("features have {found} dims but the model expects {expected}")]
    DimsMismatch { expected: usize, found: usize },
    #[error("sequence of {frames} frames is shorter than the {required} the encoder needs")]
    SequenceTooShort { frames: usize, required: usize },
    #[error("non-finite training loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("window of {window} frames is below the minimum of {minimum}")]
    WindowTooSmall { window: usize, minimum: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no training videos")]
    EmptyDataset,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchTag {
    EdTcn,
    DTcn,
    Framewise,
}

impl ArchTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchTag::EdTcn => "ed_tcn",
            ArchTag::DTcn => "d_tcn",
            ArchTag::Framewise => "framewise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ed_tcn" => Some(ArchTag::EdTcn),
            "d_tcn" => Some(ArchTag::DTcn),
            "framewise" => Some(ArchTag::Framewise),
            _ => None,
        }
    }
}

/// How the ED-TCN filter length is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterDuration {
    Seconds(f64),
    /// Mean segment duration of the shortest class in the training set.
    ShortestClassMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdTcnConfig {
    pub encoder_filters: Vec<usize>,
    pub filter_duration: FilterDuration,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for EdTcnConfig {
    fn default() -> Self {
        Self {
            encoder_filters: vec![64, 96],
            filter_duration: FilterDuration::Seconds(10.0),
            learning_rate: 0.001,
            epochs: 500,
        }
    }
}

impl EdTcnConfig {
    /// Filter length in frames: `round(seconds * fps)`, bumped to odd.
    pub fn kernel_width(seconds: f64, fps: f64) -> usize {
        let w = ((seconds * fps).round() as usize).max(1);
        if w % 2 == 0 {
            w + 1
        } else {
            w
        }
    }

    /// Input frames are padded to a multiple of this.
    pub fn stride(&self) -> usize {
        1 << self.encoder_filters.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DTcnConfig {
    pub stacks: usize,
    pub layers_per_stack: usize,
    pub filters_per_layer: Vec<usize>,
    pub kernel_width: usize,
    /// Width of the residual stream and of the summed skip outputs.
    pub residual_channels: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for DTcnConfig {
    fn default() -> Self {
        Self {
            stacks: 5,
            layers_per_stack: 3,
            filters_per_layer: vec![32, 64, 96],
            kernel_width: 3,
            residual_channels: 64,
            learning_rate: 0.001,
            epochs: 500,
        }
    }
}

impl DTcnConfig {
    /// Dilation of every layer in forward order.
    pub fn dilations(&self) -> Vec<usize> {
        (0..self.stacks).flat_map(|_| (0..self.layers_per_stack).map(|l| 1 << l)).collect()
    }

    pub fn receptive_field(&self) -> usize {
        1 + self.dilations().iter().map(|d| (self.kernel_width - 1) * d).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramewiseConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for FramewiseConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArchConfig {
    EdTcn(EdTcnConfig),
    DTcn(DTcnConfig),
    Framewise(FramewiseConfig),
}

fn list(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl ArchConfig {
    pub fn default_for(tag: ArchTag) -> Self {
        match tag {
            ArchTag::EdTcn => ArchConfig::EdTcn(EdTcnConfig::default()),
            ArchTag::DTcn => ArchConfig::DTcn(DTcnConfig::default()),
            ArchTag::Framewise => ArchConfig::Framewise(FramewiseConfig::default()),
        }
    }

    pub fn tag(&self) -> ArchTag {
        match self {
            ArchConfig::EdTcn(_) => ArchTag::EdTcn,
            ArchConfig::DTcn(_) => ArchTag::DTcn,
            ArchConfig::Framewise(_) => ArchTag::Framewise,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match self {
            ArchConfig::EdTcn(c) => c.learning_rate,
            ArchConfig::DTcn(c) => c.learning_rate,
            ArchConfig::Framewise(c) => c.learning_rate,
        }
    }

    pub fn epochs(&self) -> usize {
        match self {
            ArchConfig::EdTcn(c) => c.epochs,
            ArchConfig::DTcn(c) => c.epochs,
            ArchConfig::Framewise(c) => c.epochs,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match self {
            ArchConfig::EdTcn(c) => c.learning_rate = lr,
            ArchConfig::DTcn(c) => c.learning_rate = lr,
            ArchConfig::Framewise(c) => c.learning_rate = lr,
        }
    }

    pub fn set_epochs(&mut self, epochs: usize) {
        match self {
            ArchConfig::EdTcn(c) => c.epochs = epochs,
            ArchConfig::DTcn(c) => c.epochs = epochs,
            ArchConfig::Framewise(c) => c.epochs = epochs,
        }
    }

    pub fn validate(&self) -> Result<(), TcnError> {
        let bad = |m: &str| Err(TcnError::Config(m.to_string()));
        if !(self.learning_rate() >= 0.0 && self.learning_rate().is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        match self {
            ArchConfig::EdTcn(c) => {
                if c.encoder_filters.is_empty() || c.encoder_filters.contains(&0) {
                    return bad("ED-TCN needs at least one layer with a positive filter count");
                }
                if let FilterDuration::Seconds(s) = c.filter_duration {
                    if !(s > 0.0 && s.is_finite()) {
                        return bad("filter duration must be positive");
                    }
                }
            }
            ArchConfig::DTcn(c) => {
                if c.filters_per_layer.len() != c.layers_per_stack {
                    return bad("D-TCN needs one filter count per layer in a stack");
                }
                if c.stacks == 0 || c.layers_per_stack == 0 || c.kernel_width == 0 || c.residual_channels == 0 {
                    return bad("D-TCN sizes must be positive");
                }
                if c.filters_per_layer.contains(&0) {
                    return bad("D-TCN filter counts must be positive");
                }
            }
            ArchConfig::Framewise(_) => {}
        }
        Ok(())
    }

    /// `key = value` lines, readable back with [`ArchConfig::from_keyval`].
    pub fn to_text(&self) -> String {
        let mut out = format!("arch = {}\n", self.tag().as_str());
        match self {
            ArchConfig::EdTcn(c) => {
                out.push_str(&format!("encoder_filters = {}\n", list(&c.encoder_filters)));
                match c.filter_duration {
                    FilterDuration::Seconds(s) => out.push_str(&format!("filter_duration_s = {s}\n")),
                    FilterDuration::ShortestClassMean => out.push_str("filter_duration_s = shortest_class\n"),
                }
            }
            ArchConfig::DTcn(c) => {
                out.push_str(&format!("stacks = {}\n", c.stacks));
                out.push_str(&format!("layers_per_stack = {}\n", c.layers_per_stack));
                out.push_str(&format!("filters_per_layer = {}\n", list(&c.filters_per_layer)));
                out.push_str(&format!("kernel_width = {}\n", c.kernel_width));
                out.push_str(&format!("residual_channels = {}\n", c.residual_channels));
            }
            ArchConfig::Framewise(_) => {}
        }
        out.push_str(&format!("learning_rate = {}\n", self.learning_rate()));
        out.push_str(&format!("epochs = {}\n", self.epochs()));
        out
    }

    /// Read a section of a config file. `arch` picks the architecture when
    /// the section has no `arch` key; absent keys keep their defaults.
    pub fn from_keyval(file: &KeyValFile, section: &str, arch: Option<ArchTag>) -> Result<Self, TcnError> {
        let get = |k: &str| file.get(section, k);
        let tag = match get("arch") {
            Some(s) => ArchTag::parse(s).ok_or_else(|| TcnError::Config(format!("unknown arch `{s}`")))?,
            None => arch.unwrap_or(ArchTag::EdTcn),
        };
        let tag = arch.unwrap_or(tag);
        let num = |k: &str, v: &str| -> Result<usize, TcnError> {
            v.parse().map_err(|_| TcnError::Config(format!("{k} = `{v}` is not a non-negative integer")))
        };
        let nums = |k: &str, v: &str| -> Result<Vec<usize>, TcnError> {
            v.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(|s| num(k, s)).collect()
        };
        let mut cfg = ArchConfig::default_for(tag);
        match &mut cfg {
            ArchConfig::EdTcn(c) => {
                if let Some(v) = get("encoder_filters") {
                    c.encoder_filters = nums("encoder_filters", v)?;
                }
                if let Some(v) = get("filter_duration_s") {
                    c.filter_duration = if v == "shortest_class" {
                        FilterDuration::ShortestClassMean
                    } else {
                        FilterDuration::Seconds(
                            v.parse().map_err(|_| TcnError::Config(format!("filter_duration_s = `{v}`")))?,
                        )
                    };
                }
            }
            ArchConfig::DTcn(c) => {
                if let Some(v) = get("stacks") {
                    c.stacks = num("stacks", v)?;
                }
                if let Some(v) = get("layers_per_stack") {
                    c.layers_per_stack = num("layers_per_stack", v)?;
                }
                if let Some(v) = get("filters_per_layer") {
                    c.filters_per_layer = nums("filters_per_layer", v)?;
                }
                if let Some(v) = get("kernel_width") {
                    c.kernel_width = num("kernel_width", v)?;
                }
                if let Some(v) = get("residual_channels") {
                    c.residual_channels = num("residual_channels", v)?;
                }
            }
            ArchConfig::Framewise(_) => {}
        }
        if let Some(v) = get("learning_rate") {
            cfg.set_learning_rate(v.parse().map_err(|_| TcnError::Config(format!("learning_rate = `{v}`")))?);
        }
        if let Some(v) = get("epochs") {
            cfg.set_epochs(num("epochs", v)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dilations_repeat_per_stack() {
        let c = DTcnConfig::default();
        let d = c.dilations();
        assert_eq!(d.len(), 15);
        assert!(d.chunks(3).all(|s| s == [1, 2, 4]));
        assert_eq!(c.receptive_field(), 1 + 5 * 2 * 7);
    }

    #[test]
    fn kernel_width_is_odd() {
        assert_eq!(EdTcnConfig::kernel_width(10.0, 1.0), 11);
        assert_eq!(EdTcnConfig::kernel_width(10.0, 1.2), 13);
        assert_eq!(EdTcnConfig::kernel_width(0.01, 1.0), 1);
    }

    #[test]
    fn config_text_round_trips() {
        for tag in [ArchTag::EdTcn, ArchTag::DTcn, ArchTag::Framewise] {
            let mut c = ArchConfig::default_for(tag);
            c.set_learning_rate(0.0123);
            let file = KeyValFile::parse(&c.to_text()).unwrap();
            assert_eq!(ArchConfig::from_keyval(&file, "", None).unwrap(), c);
        }
    }
}
