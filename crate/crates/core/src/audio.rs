use ndarray::{Array2, ArrayView1, Axis};

use crate::{Error, Result};

/// A multichannel sampled waveform.
///
/// Samples are stored as `[channels × frames]`, nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Array2<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Array2<f64>, sample_rate: u32) -> Result<Self> {
        if samples.nrows() == 0 {
            return Err(Error::invalid("audio buffer needs at least one channel"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("audio samples must be finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn from_mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let len = samples.len();
        let samples = Array2::from_shape_vec((1, len), samples)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(samples, sample_rate)
    }

    /// Builds a buffer from equal-length channel vectors.
    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        let n = channels.len();
        let frames = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != frames) {
            return Err(Error::invalid("all channels must have equal length"));
        }
        let flat: Vec<f64> = channels.into_iter().flatten().collect();
        let samples = Array2::from_shape_vec((n, frames), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(samples, sample_rate)
    }

    pub fn silence(channels: usize, frames: usize, sample_rate: u32) -> Result<Self> {
        Self::new(Array2::zeros((channels, frames)), sample_rate)
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn frames(&self) -> usize {
        self.samples.ncols()
    }

    pub fn duration_secs(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> ArrayView1<'_, f64> {
        self.samples.row(index)
    }

    pub fn channel_vecs(&self) -> Vec<Vec<f64>> {
        self.samples
            .axis_iter(Axis(0))
            .map(|row| row.to_vec())
            .collect()
    }

    /// Same samples, new rate label.
    pub fn with_sample_rate(mut self, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        self.sample_rate = sample_rate;
        Ok(self)
    }

    /// Applies `f` to every channel and reassembles the result at `sample_rate`.
    ///
    /// All returned channels must have the same length.
    pub fn map_channels<F>(&self, sample_rate: u32, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let channels = self
            .channel_vecs()
            .iter()
            .map(|c| f(c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_channels(channels, sample_rate)
    }
}
