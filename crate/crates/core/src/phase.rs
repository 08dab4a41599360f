//! Phase reconstruction and manipulation: Griffin-Lim and the phase vocoder.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ShapeBuilder, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::dsp::{stft, ComplexSpectrogram, StftConfig, StftEngine};
use crate::{AudioBuffer, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitPhase {
    #[default]
    Zeros,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriffinLimConfig {
    pub n_iter: usize,
    /// Fast Griffin-Lim acceleration in `[0, 1)`; zero gives the classic algorithm.
    pub momentum: f64,
    pub init_phase: InitPhase,
    pub stft_config: StftConfig,
    /// Output length; defaults to the natural length of the frame count.
    pub length: Option<usize>,
}

impl GriffinLimConfig {
    pub fn new(stft_config: StftConfig) -> Self {
        Self {
            n_iter: 32,
            momentum: 0.99,
            init_phase: InitPhase::Zeros,
            stft_config,
            length: None,
        }
    }

    pub fn with_iterations(mut self, n_iter: usize) -> Self {
        self.n_iter = n_iter;
        self
    }

    pub fn with_momentum(mut self, momentum: f64) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_init_phase(mut self, init_phase: InitPhase) -> Self {
        self.init_phase = init_phase;
        self
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.length = Some(length);
        self
    }
}

/// Recovers a waveform whose STFT magnitude approximates `magnitude`.
///
/// `magnitude` is `[n_fft/2 + 1 × frames]`, linear amplitude.
pub fn griffin_lim(
    magnitude: &Array2<f64>,
    cfg: &GriffinLimConfig,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    let stft_cfg = &cfg.stft_config;
    stft_cfg.validate()?;
    if magnitude.nrows() != stft_cfg.freq_bins() {
        return Err(Error::invalid(format!(
            "magnitude has {} bins, n_fft {} implies {}",
            magnitude.nrows(),
            stft_cfg.n_fft,
            stft_cfg.freq_bins()
        )));
    }
    if magnitude.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
        return Err(Error::invalid("magnitude entries must be finite and >= 0"));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::invalid(format!(
            "momentum must be in [0, 1), got {}",
            cfg.momentum
        )));
    }
    let length = cfg
        .length
        .unwrap_or_else(|| stft_cfg.natural_length(magnitude.ncols()));

    // every buffer is frame-major to match the transform engine
    let shape = magnitude.raw_dim().f();
    let mut mag = Array2::<f64>::zeros(shape);
    mag.assign(magnitude);
    let mut angles: Array2<Complex64> = match cfg.init_phase {
        InitPhase::Zeros => Array2::from_elem(shape, Complex64::new(1.0, 0.0)),
        InitPhase::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Array2::from_shape_simple_fn(shape, || {
                Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
            })
        }
    };
    let n_iter = if length == 0 { 0 } else { cfg.n_iter };
    if n_iter > 0 && stft_cfg.frame_count(length) != mag.ncols() {
        return Err(Error::invalid(format!(
            "output length {length} yields {} frames, magnitude has {}",
            stft_cfg.frame_count(length),
            mag.ncols()
        )));
    }

    let mut engine = StftEngine::new(stft_cfg)?;
    let frames = mag.ncols();
    let mut previous = Array2::<Complex64>::zeros(shape);
    let mut signal = vec![0.0; length];
    let accel = cfg.momentum / (1.0 + cfg.momentum);
    let combine = |mag: &Array2<f64>, angles: &Array2<Complex64>, t: usize, buf: &mut [Complex64]| {
        let m = mag.column(t).to_slice().expect("frame-major");
        let a = angles.column(t).to_slice().expect("frame-major");
        for ((b, &m), &a) in buf.iter_mut().zip(m).zip(a) {
            *b = a * m;
        }
    };
    for _ in 0..n_iter {
        engine.inverse_frames(frames, &mut signal, |t, buf| combine(&mag, &angles, t, buf))?;
        engine.forward_frames(&signal, |t, rebuilt| {
            let a = angles.column_mut(t).into_slice().expect("frame-major");
            let p = previous.column_mut(t).into_slice().expect("frame-major");
            for ((a, p), &r) in a.iter_mut().zip(p.iter_mut()).zip(rebuilt) {
                let z = r - *p * accel;
                *a = z * (1.0 / (z.norm_sqr().sqrt() + 1e-16));
                *p = r;
            }
        })?;
    }
    engine.inverse_frames(frames, &mut signal, |t, buf| combine(&mag, &angles, t, buf))?;
    AudioBuffer::from_mono(signal, sample_rate)
}

/// `‖|stft(signal)| − target‖_F / ‖target‖_F`.
pub fn spectral_convergence(
    target: &Array2<f64>,
    signal: &[f64],
    cfg: &StftConfig,
    sample_rate: u32,
) -> Result<f64> {
    let spec = stft(signal, cfg, sample_rate)?;
    if spec.data.raw_dim() != target.raw_dim() {
        return Err(Error::invalid("signal spectrogram shape differs from target"));
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    Zip::from(&spec.data).and(target).for_each(|z, &m| {
        diff += (z.norm_sqr().sqrt() - m).powi(2);
        norm += m * m;
    });
    if norm == 0.0 {
        return Ok(diff.sqrt());
    }
    Ok((diff / norm).sqrt())
}

/// Maps an angle to `(−π, π]`.
fn wrap(phase: f64) -> f64 {
    let w = phase - 2.0 * PI * (phase / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Time-stretches a spectrogram by `rate` (>1 is faster) without changing pitch.
///
/// Output frame `j` sits at input position `j·rate`: its magnitude is linearly
/// interpolated between the neighbouring frames and its phase accumulates the
/// per-bin phase advance measured between them.
pub fn phase_vocoder(spec: &ComplexSpectrogram, rate: f64) -> Result<ComplexSpectrogram> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("rate must be > 0, got {rate}")));
    }
    let bins = spec.freq_bins();
    let frames = spec.frames();
    let out_frames = (frames as f64 / rate).ceil() as usize;
    let n_fft = spec.config.n_fft as f64;
    let hop = spec.config.hop_length as f64;
    let expected: Array1<f64> = (0..bins).map(|k| 2.0 * PI * hop * k as f64 / n_fft).collect();

    let zero = Complex64::new(0.0, 0.0);
    let frame = |t: usize, k: usize| if t < frames { spec.data[[k, t]] } else { zero };

    let mut raw = Vec::with_capacity(bins * out_frames);
    let mut phase: Array1<f64> = (0..bins).map(|k| frame(0, k).arg()).collect();
    for j in 0..out_frames {
        let step = j as f64 * rate;
        let idx = (step.floor() as usize).min(frames.saturating_sub(1));
        let alpha = step - idx as f64;
        for k in 0..bins {
            let (s0, s1) = (frame(idx, k), frame(idx + 1, k));
            let mag = (1.0 - alpha) * s0.norm_sqr().sqrt() + alpha * s1.norm_sqr().sqrt();
            raw.push(Complex64::from_polar(mag, phase[k]));
            let advance = s1.arg() - s0.arg() - expected[k];
            phase[k] += expected[k] + wrap(advance);
        }
    }
    let out = Array2::from_shape_vec((out_frames, bins), raw)
        .map_err(|e| Error::invalid(e.to_string()))?
        .reversed_axes();
    ComplexSpectrogram::new(out, spec.config.clone(), spec.sample_rate)
}
