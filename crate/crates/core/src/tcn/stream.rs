//! Windowed and incremental inference.
//!
//! Frames are cut into consecutive windows. A window that is not full (only
//! the last one) is padded to the window length by repeating its final
//! frame; predictions are emitted for the real frames only.

use super::model::{pad_repeat, ModelParams};
use super::ops::{self, Mat};
use super::TcnError;
use crate::features::FeatureSequence;

pub const DEFAULT_WINDOW: usize = 90;

fn check_window(params: &ModelParams, window: usize) -> Result<(), TcnError> {
    let minimum = params.stride();
    if window < minimum {
        return Err(TcnError::WindowTooSmall { window, minimum });
    }
    Ok(())
}

fn run_window(params: &ModelParams, frames: &Mat, window: usize) -> Result<Vec<usize>, TcnError> {
    let padded = pad_repeat(frames, window);
    let mut pred = ops::argmax_rows(&params.forward(&padded)?);
    pred.truncate(frames.rows);
    Ok(pred)
}

/// Predictions for the whole sequence, one window at a time.
pub fn predict_windowed(params: &ModelParams, features: &FeatureSequence, window: usize) -> Result<Vec<usize>, TcnError> {
    check_window(params, window)?;
    if features.dims != params.input_dims {
        return Err(TcnError::DimsMismatch { expected: params.input_dims, found: features.dims });
    }
    let mut out = Vec::with_capacity(features.frames());
    for chunk in features.data.chunks(window * features.dims) {
        let m = Mat::from_vec(chunk.len() / features.dims, features.dims, chunk.to_vec());
        out.extend(run_window(params, &m, window)?);
    }
    Ok(out)
}

/// Consumes frames as they arrive and emits predictions whenever a window
/// fills up; [`StreamingPredictor::finish`] flushes a partial window.
#[derive(Debug, Clone)]
pub struct StreamingPredictor<'a> {
    params: &'a ModelParams,
    window: usize,
    buffer: Vec<f64>,
}

impl<'a> StreamingPredictor<'a> {
    pub fn new(params: &'a ModelParams, window: usize) -> Result<Self, TcnError> {
        check_window(params, window)?;
        Ok(Self { params, window, buffer: Vec::with_capacity(window * params.input_dims) })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Frames waiting for their window to complete.
    pub fn pending(&self) -> usize {
        self.buffer.len() / self.params.input_dims
    }

    /// Append row-major frames; returns predictions for every window
    /// completed by them.
    pub fn push(&mut self, frames: &[f64]) -> Result<Vec<usize>, TcnError> {
        let dims = self.params.input_dims;
        if frames.len() % dims != 0 {
            return Err(TcnError::DimsMismatch { expected: dims, found: frames.len() % dims });
        }
        let mut out = Vec::new();
        for frame in frames.chunks(dims) {
            self.buffer.extend_from_slice(frame);
            if self.pending() == self.window {
                out.extend(self.flush()?);
            }
        }
        Ok(out)
    }

    pub fn push_sequence(&mut self, seq: &FeatureSequence) -> Result<Vec<usize>, TcnError> {
        if seq.dims != self.params.input_dims {
            return Err(TcnError::DimsMismatch { expected: self.params.input_dims, found: seq.dims });
        }
        self.push(&seq.data)
    }

    fn flush(&mut self) -> Result<Vec<usize>, TcnError> {
        if self.buffer.is_empty() {
            return Ok(Vec::new());
        }
        let m = Mat::from_vec(self.pending(), self.params.input_dims, std::mem::take(&mut self.buffer));
        run_window(self.params, &m, self.window)
    }

    /// Predictions for a trailing partial window, if any.
    pub fn finish(mut self) -> Result<Vec<usize>, TcnError> {
        self.flush()
    }
}
