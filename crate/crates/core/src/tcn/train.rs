use super::model::{pad_repeat, ModelParams};
use super::ops::{self, Mat};
use super::optim::Optimizer;
use super::{ArchConfig, FilterDuration, TcnError};
use crate::features::{Dataset, FeatureSequence};
use crate::labels::run_length_encode;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-video loss for each epoch.
    pub epoch_loss: Vec<f64>,
    /// Frame accuracy on the training videos, measured during each epoch.
    pub train_accuracy: Vec<f64>,
    /// Frame accuracy on the validation set after each epoch; empty when
    /// no validation set was given.
    pub validation_accuracy: Vec<f64>,
    pub seconds: f64,
    pub seed: u64,
}

pub(crate) fn to_mat(seq: &FeatureSequence) -> Mat {
    Mat::from_vec(seq.frames(), seq.dims, seq.data.clone())
}

/// Mean segment duration (seconds) of the class whose mean is shortest.
fn shortest_class_mean(data: &Dataset) -> Result<f64, TcnError> {
    let mut total = vec![0usize; data.label_set.len()];
    let mut count = vec![0usize; data.label_set.len()];
    for v in &data.items {
        let runs = run_length_encode(&v.labels).map_err(|e| TcnError::Config(e.to_string()))?;
        for (c, len) in runs.runs {
            total[c] += len;
            count[c] += 1;
        }
    }
    let fps = data.items[0].features.fps;
    total
        .iter()
        .zip(&count)
        .filter(|(_, &n)| n > 0)
        .map(|(&t, &n)| t as f64 / n as f64 / fps)
        .min_by(f64::total_cmp)
        .ok_or(TcnError::EmptyDataset)
}

/// Fit a model. One gradient step per video per epoch, videos visited in a
/// seeded random order. Fully deterministic for a given seed.
pub fn train(
    data: &Dataset,
    config: &ArchConfig,
    seed: u64,
    validation: Option<&Dataset>,
) -> Result<(ModelParams, TrainReport), TcnError> {
    let start = Instant::now();
    let first = data.items.first().ok_or(TcnError::EmptyDataset)?;
    let dims = first.features.dims;
    for v in data.items.iter().chain(validation.map_or(&[][..], |d| &d.items[..])) {
        if v.features.dims != dims {
            return Err(TcnError::DimsMismatch { expected: dims, found: v.features.dims });
        }
    }
    let mut config = config.clone();
    if let ArchConfig::EdTcn(c) = &mut config {
        if c.filter_duration == FilterDuration::ShortestClassMean {
            c.filter_duration = FilterDuration::Seconds(shortest_class_mean(data)?);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(&config, dims, data.label_set.len(), first.features.fps, &mut rng)?;
    let lr = config.learning_rate();
    let mut opt = match config {
        ArchConfig::EdTcn(_) => Optimizer::rmsprop(lr, &params.tensors),
        _ => Optimizer::adam(lr, &params.tensors),
    };

    let inputs: Vec<Mat> = data.items.iter().map(|v| to_mat(&v.features)).collect();
    let mut report = TrainReport {
        epoch_loss: Vec::new(),
        train_accuracy: Vec::new(),
        validation_accuracy: Vec::new(),
        seconds: 0.0,
        seed,
    };
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 0..config.epochs() {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut hits, mut frames) = (0.0, 0usize, 0usize);
        for &i in &order {
            let labels = &data.items[i].labels;
            let (loss, probs, grads) = params.loss_and_gradients(&inputs[i], labels)?;
            if !loss.is_finite() {
                return Err(TcnError::NonFiniteLoss { epoch });
            }
            loss_sum += loss;
            hits += ops::argmax_rows(&probs).iter().zip(labels).filter(|(p, t)| p == t).count();
            frames += labels.len();
            opt.step(&mut params.tensors, &grads);
        }
        report.epoch_loss.push(loss_sum / inputs.len() as f64);
        report.train_accuracy.push(100.0 * hits as f64 / frames as f64);
        if let Some(val) = validation {
            let (mut hits, mut frames) = (0usize, 0usize);
            for v in &val.items {
                let pred = predict(&params, &v.features)?;
                hits += pred.iter().zip(&v.labels).filter(|(p, t)| p == t).count();
                frames += pred.len();
            }
            report.validation_accuracy.push(100.0 * hits as f64 / frames.max(1) as f64);
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok((params, report))
}

/// Most probable class per frame; ties go to the lowest class id. Inputs
/// shorter than the ED-TCN stride are repeat-padded first.
pub fn predict(params: &ModelParams, features: &FeatureSequence) -> Result<Vec<usize>, TcnError> {
    let x = to_mat(features);
    let frames = x.rows;
    let x = if frames < params.stride() { pad_repeat(&x, params.stride()) } else { x };
    let mut pred = ops::argmax_rows(&params.forward(&x)?);
    pred.truncate(frames);
    Ok(pred)
}
