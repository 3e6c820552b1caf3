use super::ops::{self, Mat};
use super::{ArchConfig, EdTcnConfig, FilterDuration, TcnError};
use rand::Rng;

/// Per-frame class probabilities, `frames x classes`.
pub type Probabilities = Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedTensor {
    fn zeros(name: String, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { name, shape, data: vec![0.0; n] }
    }
}

/// Weights of a trained or freshly initialised segmenter. Convolution
/// kernels are `[width, in, out]`, biases `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ArchConfig,
    pub n_classes: usize,
    pub input_dims: usize,
    pub fps_at_train: f64,
    pub tensors: Vec<NamedTensor>,
}

fn layout(config: &ArchConfig, dims: usize, classes: usize, fps: f64) -> Result<Vec<NamedTensor>, TcnError> {
    let mut out = Vec::new();
    let mut conv = |name: String, width: usize, cin: usize, cout: usize| {
        out.push(NamedTensor::zeros(format!("{name}.w"), vec![width, cin, cout]));
        out.push(NamedTensor::zeros(format!("{name}.b"), vec![cout]));
    };
    match config {
        ArchConfig::EdTcn(c) => {
            let FilterDuration::Seconds(s) = c.filter_duration else {
                return Err(TcnError::Config("filter duration must be resolved before building the model".into()));
            };
            let w = EdTcnConfig::kernel_width(s, fps);
            let f = &c.encoder_filters;
            let mut cin = dims;
            for (l, &cout) in f.iter().enumerate() {
                conv(format!("enc{l}"), w, cin, cout);
                cin = cout;
            }
            for l in 0..f.len() {
                let cout = f[f.len() - 1 - l];
                conv(format!("dec{l}"), w, cin, cout);
                cin = cout;
            }
            conv("out".into(), 1, cin, classes);
        }
        ArchConfig::DTcn(c) => {
            let r = c.residual_channels;
            conv("in".into(), 1, dims, r);
            for s in 0..c.stacks {
                for (l, &f) in c.filters_per_layer.iter().enumerate() {
                    conv(format!("s{s}.l{l}.dil"), c.kernel_width, r, 2 * f);
                    conv(format!("s{s}.l{l}.res"), 1, f, r);
                    conv(format!("s{s}.l{l}.skip"), 1, f, r);
                }
            }
            conv("out".into(), 1, r, classes);
        }
        ArchConfig::Framewise(_) => conv("out".into(), 1, dims, classes),
    }
    Ok(out)
}

struct EdLayer {
    input: Mat,
    act: Mat,
    arg: Vec<usize>,
}

struct DLayer {
    input: Mat,
    th: Mat,
    sg: Mat,
    z: Mat,
}

enum Cache {
    Ed { enc: Vec<EdLayer>, dec: Vec<EdLayer>, last: Mat },
    D { x: Mat, layers: Vec<DLayer>, skip: Mat },
    Framewise { x: Mat },
}

impl ModelParams {
    /// Glorot-uniform kernels and zero biases.
    pub fn init(
        config: &ArchConfig,
        input_dims: usize,
        n_classes: usize,
        fps: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, TcnError> {
        config.validate()?;
        if input_dims == 0 || n_classes == 0 {
            return Err(TcnError::Config("input dims and class count must be positive".into()));
        }
        let mut tensors = layout(config, input_dims, n_classes, fps)?;
        for t in &mut tensors {
            if t.shape.len() == 3 {
                let fan_in = t.shape[0] * t.shape[1];
                let fan_out = t.shape[0] * t.shape[2];
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                t.data.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
            }
        }
        Ok(Self { config: config.clone(), n_classes, input_dims, fps_at_train: fps, tensors })
    }

    /// Same architecture with every value set to zero.
    pub fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.tensors.iter_mut().for_each(|t| t.data.iter_mut().for_each(|v| *v = 0.0));
        z
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// ED-TCN filter length in frames.
    pub fn kernel_width(&self) -> usize {
        self.tensors[0].shape[0]
    }

    /// Frames are padded to a multiple of this before the forward pass.
    pub fn stride(&self) -> usize {
        match &self.config {
            ArchConfig::EdTcn(c) => c.stride(),
            _ => 1,
        }
    }

    /// Checks names and shapes against the configuration.
    pub fn validate(&self) -> Result<(), TcnError> {
        self.config.validate()?;
        let expected = layout(&self.config, self.input_dims, self.n_classes, self.fps_at_train)?;
        let same = expected.len() == self.tensors.len()
            && expected.iter().zip(&self.tensors).all(|(e, t)| {
                e.name == t.name && e.shape == t.shape && t.data.len() == t.shape.iter().product::<usize>()
            });
        if !same {
            return Err(TcnError::ShapeMismatch("tensors do not match the architecture".into()));
        }
        Ok(())
    }

    fn check_dims(&self, x: &Mat) -> Result<(), TcnError> {
        if x.cols != self.input_dims {
            return Err(TcnError::DimsMismatch { expected: self.input_dims, found: x.cols });
        }
        if x.rows == 0 {
            return Err(TcnError::SequenceTooShort { frames: 0, required: 1 });
        }
        Ok(())
    }

    /// Class probabilities for every frame. ED-TCN needs at least
    /// `2^layers` frames; shorter inputs are rejected here (use
    /// [`super::predict`] to pad them).
    pub fn forward(&self, x: &Mat) -> Result<Probabilities, TcnError> {
        self.check_dims(x)?;
        let s = self.stride();
        if x.rows < s {
            return Err(TcnError::SequenceTooShort { frames: x.rows, required: s });
        }
        let padded = pad_repeat(x, x.rows.next_multiple_of(s));
        let (logits, _) = self.forward_cached(&padded)?;
        let mut p = ops::softmax_rows(&logits);
        p.rows = x.rows;
        p.data.truncate(x.rows * p.cols);
        Ok(p)
    }

    /// Mean cross-entropy over the real frames and its gradient for every
    /// tensor (same order as `tensors`). Input is repeat-padded as needed;
    /// padded frames carry no loss.
    pub fn loss_and_gradients(&self, x: &Mat, labels: &[usize]) -> Result<(f64, Probabilities, Vec<Vec<f64>>), TcnError> {
        self.check_dims(x)?;
        if labels.len() != x.rows {
            return Err(TcnError::ShapeMismatch(format!("{} labels for {} frames", labels.len(), x.rows)));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= self.n_classes) {
            return Err(TcnError::ShapeMismatch(format!("class id {c} with {} classes", self.n_classes)));
        }
        let len = x.rows.max(self.stride()).next_multiple_of(self.stride());
        let padded = pad_repeat(x, len);
        let mut lab = labels.to_vec();
        lab.resize(len, 0);
        let (logits, cache) = self.forward_cached(&padded)?;
        let (loss, mut probs, dlogits) = ops::softmax_cross_entropy(&logits, &lab, x.rows);
        let grads = self.backward(&cache, &dlogits);
        probs.rows = x.rows;
        probs.data.truncate(x.rows * probs.cols);
        Ok((loss, probs, grads))
    }

    fn forward_cached(&self, x: &Mat) -> Result<(Mat, Cache), TcnError> {
        let t = &self.tensors;
        let conv = |h: &Mat, i: usize, dilation: usize| {
            ops::conv1d(h, &t[i].data, &t[i + 1].data, t[i].shape[0], dilation)
        };
        match &self.config {
            ArchConfig::EdTcn(c) => {
                let n = c.encoder_filters.len();
                let mut h = x.clone();
                let mut enc = Vec::with_capacity(n);
                for l in 0..n {
                    let act = ops::relu(conv(&h, 2 * l, 1)?);
                    let (pooled, arg) = ops::maxpool2(&act);
                    enc.push(EdLayer { input: h, act, arg });
                    h = pooled;
                }
                let mut dec = Vec::with_capacity(n);
                for l in 0..n {
                    let input = ops::upsample2(&h);
                    let act = ops::relu(conv(&input, 2 * (n + l), 1)?);
                    h = act.clone();
                    dec.push(EdLayer { input, act, arg: Vec::new() });
                }
                let logits = conv(&h, 4 * n, 1)?;
                Ok((logits, Cache::Ed { enc, dec, last: h }))
            }
            ArchConfig::DTcn(c) => {
                let mut h = conv(x, 0, 1)?;
                let mut skip = Mat::zeros(x.rows, c.residual_channels);
                let mut layers = Vec::new();
                for (i, d) in c.dilations().into_iter().enumerate() {
                    let base = 2 + 6 * i;
                    let (z, th, sg) = ops::gated(&conv(&h, base, d)?);
                    let res = conv(&z, base + 2, 1)?;
                    skip.add_assign(&conv(&z, base + 4, 1)?);
                    let mut next = h.clone();
                    next.add_assign(&res);
                    layers.push(DLayer { input: std::mem::replace(&mut h, next), th, sg, z });
                }
                let skip = ops::relu(skip);
                let logits = conv(&skip, t.len() - 2, 1)?;
                Ok((logits, Cache::D { x: x.clone(), layers, skip }))
            }
            ArchConfig::Framewise(_) => Ok((conv(x, 0, 1)?, Cache::Framewise { x: x.clone() })),
        }
    }

    fn backward(&self, cache: &Cache, dlogits: &Mat) -> Vec<Vec<f64>> {
        let t = &self.tensors;
        let mut grads: Vec<Vec<f64>> = t.iter().map(|x| vec![0.0; x.data.len()]).collect();
        // Accumulate into tensors i (kernel) and i + 1 (bias).
        let mut conv_back = |input: &Mat, i: usize, dilation: usize, dy: &Mat, want_dx: bool| {
            let (gw, gb) = grads.split_at_mut(i + 1);
            ops::conv1d_backward(input, &t[i].data, t[i].shape[0], dilation, dy, &mut gw[i], &mut gb[0], want_dx)
        };
        match (cache, &self.config) {
            (Cache::Ed { enc, dec, last }, ArchConfig::EdTcn(c)) => {
                let n = c.encoder_filters.len();
                let mut dh = conv_back(last, 4 * n, 1, dlogits, true).unwrap();
                for l in (0..n).rev() {
                    let da = ops::relu_backward(dh, &dec[l].act);
                    let du = conv_back(&dec[l].input, 2 * (n + l), 1, &da, true).unwrap();
                    dh = ops::upsample2_backward(&du);
                }
                for l in (0..n).rev() {
                    let layer = &enc[l];
                    let dr = ops::maxpool2_backward(&dh, &layer.arg, layer.act.rows);
                    let da = ops::relu_backward(dr, &layer.act);
                    match conv_back(&layer.input, 2 * l, 1, &da, l > 0) {
                        Some(dx) => dh = dx,
                        None => break,
                    }
                }
            }
            (Cache::D { x, layers, skip }, ArchConfig::DTcn(c)) => {
                let dskip = conv_back(skip, t.len() - 2, 1, dlogits, true).unwrap();
                let dskip = ops::relu_backward(dskip, skip);
                let mut dh = Mat::zeros(x.rows, c.residual_channels);
                let dilations = c.dilations();
                for (i, layer) in layers.iter().enumerate().rev() {
                    let base = 2 + 6 * i;
                    let mut dz = conv_back(&layer.z, base + 4, 1, &dskip, true).unwrap();
                    dz.add_assign(&conv_back(&layer.z, base + 2, 1, &dh, true).unwrap());
                    let da = ops::gated_backward(&dz, &layer.th, &layer.sg);
                    dh.add_assign(&conv_back(&layer.input, base, dilations[i], &da, true).unwrap());
                }
                conv_back(x, 0, 1, &dh, false);
            }
            (Cache::Framewise { x }, ArchConfig::Framewise(_)) => {
                conv_back(x, 0, 1, dlogits, false);
            }
            _ => unreachable!("cache built by the same architecture"),
        }
        grads
    }
}

/// Extend to `len` rows by repeating the last row.
pub(crate) fn pad_repeat(x: &Mat, len: usize) -> Mat {
    let mut y = x.clone();
    if len > x.rows {
        let last = x.row(x.rows - 1).to_vec();
        y.data.reserve((len - x.rows) * x.cols);
        for _ in x.rows..len {
            y.data.extend_from_slice(&last);
        }
        y.rows = len;
    }
    y
}
