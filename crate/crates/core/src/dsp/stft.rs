use std::sync::Arc;

use ndarray::{Array2, ShapeBuilder};
use rustfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use super::fft::is_power_of_two;
use super::window::{make_window, WindowKind};
use crate::{Error, Result};

/// Envelope values at or below this are treated as zero window energy.
const ENVELOPE_FLOOR: f64 = 1e-11;

/// Parameters shared by the forward and inverse transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    pub n_fft: usize,
    pub win_length: usize,
    pub hop_length: usize,
    pub window: WindowKind,
    /// Reflect-pad the signal by `n_fft / 2` on both ends.
    pub center: bool,
    /// Exponent applied by magnitude-style consumers (spectrogram, mel); `None` keeps the complex values.
    pub power: Option<f64>,
}

impl StftConfig {
    /// Hann window spanning the whole FFT, centered frames, power spectrogram.
    pub fn new(n_fft: usize, hop_length: usize) -> Self {
        Self {
            n_fft,
            win_length: n_fft,
            hop_length,
            window: WindowKind::Hann,
            center: true,
            power: Some(2.0),
        }
    }

    pub fn with_win_length(mut self, win_length: usize) -> Self {
        self.win_length = win_length;
        self
    }

    pub fn with_window(mut self, window: WindowKind) -> Self {
        self.window = window;
        self
    }

    pub fn with_center(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_power(mut self, power: Option<f64>) -> Self {
        self.power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !is_power_of_two(self.n_fft) {
            return Err(Error::invalid(format!(
                "n_fft must be a power of two, got {}",
                self.n_fft
            )));
        }
        if self.hop_length == 0
            || self.hop_length > self.win_length
            || self.win_length > self.n_fft
        {
            return Err(Error::invalid(format!(
                "need 0 < hop_length ({}) <= win_length ({}) <= n_fft ({})",
                self.hop_length, self.win_length, self.n_fft
            )));
        }
        if let Some(p) = self.power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::invalid(format!("power must be positive, got {p}")));
            }
        }
        Ok(())
    }

    pub fn freq_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Window of `win_length` zero-padded symmetrically to `n_fft`.
    pub fn padded_window(&self) -> Result<Vec<f64>> {
        let win = make_window(self.window, self.win_length, true)?;
        let offset = (self.n_fft - self.win_length) / 2;
        let mut padded = vec![0.0; self.n_fft];
        padded[offset..offset + self.win_length].copy_from_slice(&win);
        Ok(padded)
    }

    /// Number of frames `stft` produces for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if self.center {
            1 + len / self.hop_length
        } else if len < self.win_length {
            0
        } else {
            1 + (len - self.win_length) / self.hop_length
        }
    }

    /// Signal length an inverse transform of `frames` frames spans.
    pub fn natural_length(&self, frames: usize) -> usize {
        if frames == 0 {
            return 0;
        }
        if self.center {
            self.hop_length * (frames - 1)
        } else {
            self.win_length + self.hop_length * (frames - 1)
        }
    }

    /// Offset of frame 0's first FFT sample relative to signal index 0.
    fn origin(&self) -> isize {
        if self.center {
            -((self.n_fft / 2) as isize)
        } else {
            -(((self.n_fft - self.win_length) / 2) as isize)
        }
    }
}

/// One-sided complex spectrogram, `[freq_bins × time_frames]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub data: Array2<Complex64>,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn new(data: Array2<Complex64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        config.validate()?;
        if data.nrows() != config.freq_bins() {
            return Err(Error::invalid(format!(
                "spectrogram has {} bins, config implies {}",
                data.nrows(),
                config.freq_bins()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self {
            data,
            config,
            sample_rate,
        })
    }

    pub fn freq_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    /// Center frequency in Hz of bin `k`.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.config.n_fft as f64
    }
}

/// Index into `0..len` with reflection at both ends (no edge repeat).
fn reflect(index: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = index.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// Plans and work buffers for repeated transforms under one config.
pub(crate) struct StftEngine {
    config: StftConfig,
    window: Vec<f64>,
    /// Window with the inverse FFT's `1/n_fft` folded in.
    synthesis: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    scratch: Vec<Complex64>,
    frame: Vec<f64>,
    spectrum: Vec<Complex64>,
    acc: Vec<f64>,
    /// Squared-window overlap-add envelope and its reciprocal, keyed by frame count.
    envelope: Option<(usize, Vec<f64>, Vec<f64>)>,
}

impl StftEngine {
    pub(crate) fn new(config: &StftConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(config.n_fft);
        let inverse = planner.plan_fft_inverse(config.n_fft);
        let scratch_len = forward.get_scratch_len().max(inverse.get_scratch_len());
        let window = config.padded_window()?;
        let scale = 1.0 / config.n_fft as f64;
        Ok(Self {
            synthesis: window.iter().map(|w| w * scale).collect(),
            window,
            frame: forward.make_input_vec(),
            spectrum: forward.make_output_vec(),
            scratch: vec![Complex64::default(); scratch_len],
            forward,
            inverse,
            acc: Vec::new(),
            envelope: None,
            config: config.clone(),
        })
    }

    fn check_signal(&self, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::invalid("cannot transform an empty signal"));
        }
        if !self.config.center && len < self.config.win_length {
            return Err(Error::invalid(format!(
                "signal of {len} samples is shorter than win_length {} with center=false",
                self.config.win_length
            )));
        }
        Ok(())
    }

    /// Windows frame `t` of `signal` into the real input buffer.
    fn load_frame(&mut self, signal: &[f64], t: usize) {
        let cfg = &self.config;
        let (n_fft, len) = (cfg.n_fft, signal.len());
        let start = cfg.origin() + (t * cfg.hop_length) as isize;
        if start >= 0 && start as usize + n_fft <= len {
            let src = &signal[start as usize..start as usize + n_fft];
            for ((slot, &x), &w) in self.frame.iter_mut().zip(src).zip(&self.window) {
                *slot = x * w;
            }
            return;
        }
        for (j, slot) in self.frame.iter_mut().enumerate() {
            let pos = start + j as isize;
            let x = if cfg.center {
                signal[reflect(pos, len)]
            } else if pos >= 0 && (pos as usize) < len {
                signal[pos as usize]
            } else {
                0.0
            };
            *slot = x * self.window[j];
        }
    }

    /// Runs the forward transform frame by frame, handing each one-sided
    /// spectrum to `sink`. Returns the frame count.
    pub(crate) fn forward_frames(
        &mut self,
        signal: &[f64],
        mut sink: impl FnMut(usize, &[Complex64]),
    ) -> Result<usize> {
        self.check_signal(signal.len())?;
        let frames = self.config.frame_count(signal.len());
        for t in 0..frames {
            self.load_frame(signal, t);
            self.forward
                .process_with_scratch(&mut self.frame, &mut self.spectrum, &mut self.scratch)
                .map_err(|e| Error::invalid(e.to_string()))?;
            sink(t, &self.spectrum);
        }
        Ok(frames)
    }

    /// Forward transform into `out`, which must be `[bins × frame_count(len)]`.
    pub(crate) fn forward_into(&mut self, signal: &[f64], out: &mut Array2<Complex64>) -> Result<()> {
        let expected = (self.config.freq_bins(), self.config.frame_count(signal.len()));
        if out.dim() != expected {
            return Err(Error::invalid(format!(
                "output is {:?}, transform produces {expected:?}",
                out.dim()
            )));
        }
        self.forward_frames(signal, |t, spectrum| {
            out.column_mut(t).iter_mut().zip(spectrum).for_each(|(d, s)| *d = *s);
        })?;
        Ok(())
    }

    fn envelope(&mut self, frames: usize) -> (&[f64], &[f64]) {
        if self.envelope.as_ref().is_none_or(|(n, ..)| *n != frames) {
            let hop = self.config.hop_length;
            let mut env = vec![0.0; self.config.n_fft + hop * (frames - 1)];
            for t in 0..frames {
                for (e, w) in env[t * hop..].iter_mut().zip(&self.window) {
                    *e += w * w;
                }
            }
            let inv = env.iter().map(|&e| if e > ENVELOPE_FLOOR { 1.0 / e } else { 0.0 }).collect();
            self.envelope = Some((frames, env, inv));
        }
        let (_, env, inv) = self.envelope.as_ref().expect("just set");
        (env, inv)
    }

    /// Weighted overlap-add inverse of `data` (`[bins × frames]`) into `out`.
    pub(crate) fn inverse_into(&mut self, data: &Array2<Complex64>, out: &mut [f64]) -> Result<()> {
        let bins = self.config.freq_bins();
        if data.nrows() != bins {
            return Err(Error::invalid(format!(
                "spectrogram has {} bins, config implies {bins}",
                data.nrows()
            )));
        }
        self.inverse_frames(data.ncols(), out, |t, spectrum| {
            let column = data.column(t);
            match column.as_slice() {
                Some(c) => spectrum.copy_from_slice(c),
                None => spectrum.iter_mut().zip(column).for_each(|(d, s)| *d = *s),
            }
        })
    }

    /// Overlap-add inverse where `source(t, buf)` fills the spectrum of frame `t`.
    pub(crate) fn inverse_frames(
        &mut self,
        frames: usize,
        out: &mut [f64],
        mut source: impl FnMut(usize, &mut [Complex64]),
    ) -> Result<()> {
        out.fill(0.0);
        if frames == 0 || out.is_empty() {
            return Ok(());
        }
        let bins = self.config.freq_bins();
        let (n_fft, hop) = (self.config.n_fft, self.config.hop_length);
        // overlap-add buffer in frame coordinates; output index i maps to i - origin
        let span = n_fft + hop * (frames - 1);
        let mut acc = std::mem::take(&mut self.acc);
        acc.clear();
        acc.resize(span, 0.0);
        for t in 0..frames {
            source(t, &mut self.spectrum);
            // a real frame has purely real DC and Nyquist bins
            self.spectrum[0].im = 0.0;
            self.spectrum[bins - 1].im = 0.0;
            self.inverse
                .process_with_scratch(&mut self.spectrum, &mut self.frame, &mut self.scratch)
                .map_err(|e| Error::invalid(e.to_string()))?;
            for ((a, &x), &w) in acc[t * hop..].iter_mut().zip(&self.frame).zip(&self.synthesis) {
                *a += x * w;
            }
        }

        let offset = (-self.config.origin()) as usize;
        let (window, win_length) = (self.config.window, self.config.win_length);
        let (env, inv) = self.envelope(frames);
        let limit = out.len().min(span.saturating_sub(offset));
        let first = (0..limit).find(|&i| env[i + offset] > ENVELOPE_FLOOR);
        let last = (0..limit).rev().find(|&i| env[i + offset] > ENVELOPE_FLOOR);
        let mut result = Ok(());
        if let (Some(first), Some(last)) = (first, last) {
            for (i, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
                let e = env[i + offset];
                if e <= ENVELOPE_FLOOR {
                    result = Err(Error::NonInvertible(format!(
                        "window envelope is {e:e} at sample {i}; hop {hop} too large for window {window} of length {win_length}"
                    )));
                    break;
                }
                *slot = acc[i + offset] * inv[i + offset];
            }
        }
        self.acc = acc;
        result
    }
}

/// Short-time Fourier transform of a single channel.
pub fn stft(signal: &[f64], config: &StftConfig, sample_rate: u32) -> Result<ComplexSpectrogram> {
    let mut engine = StftEngine::new(config)?;
    engine.check_signal(signal.len())?;
    // frame-major storage so each column is contiguous
    let mut data = Array2::zeros((config.freq_bins(), config.frame_count(signal.len())).f());
    engine.forward_into(signal, &mut data)?;
    ComplexSpectrogram::new(data, config.clone(), sample_rate)
}

/// Inverse STFT by squared-window weighted overlap-add.
///
/// The output has `expected_length` samples when given, otherwise the natural
/// length for the frame count. Fails with [`Error::NonInvertible`] if the window
/// envelope vanishes between two covered samples.
pub fn istft(spec: &ComplexSpectrogram, expected_length: Option<usize>) -> Result<Vec<f64>> {
    let config = &spec.config;
    let mut engine = StftEngine::new(config)?;
    let mut out = vec![0.0; expected_length.unwrap_or_else(|| config.natural_length(spec.frames()))];
    engine.inverse_into(&spec.data, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn frame_count_centered() {
        let cfg = StftConfig::new(256, 250).with_win_length(256);
        let spec = stft(&vec![0.1; 1000], &cfg, 8000).unwrap();
        assert_eq!(spec.frames(), 5);
        assert_eq!(spec.freq_bins(), 129);
    }

    #[test]
    fn cosine_peaks_at_its_bin() {
        let n_fft = 64;
        let sr = 8000;
        let f = 3.0 * sr as f64 / n_fft as f64;
        let x: Vec<f64> = (0..1024)
            .map(|n| (2.0 * PI * f * n as f64 / sr as f64).cos())
            .collect();
        let cfg = StftConfig::new(n_fft, 16).with_window(WindowKind::Rectangular);
        let spec = stft(&x, &cfg, sr).unwrap();
        for t in 0..spec.frames() {
            let col = spec.data.column(t);
            let argmax = (0..col.len())
                .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
                .unwrap();
            assert_eq!(argmax, 3, "frame {t}");
        }
    }

    #[test]
    fn zero_signal_zero_spectrum() {
        let spec = stft(&[0.0; 300], &StftConfig::new(64, 16), 8000).unwrap();
        assert!(spec.data.iter().all(|z| z.norm() == 0.0));
        let back = istft(&spec, None).unwrap();
        assert!(back.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(stft(&[0.0; 10], &StftConfig::new(48, 12), 8000).is_err());
        assert!(stft(&[0.0; 10], &StftConfig::new(64, 0), 8000).is_err());
        assert!(stft(&[0.0; 10], &StftConfig::new(64, 16).with_win_length(80), 8000).is_err());
        assert!(stft(&[], &StftConfig::new(64, 16), 8000).is_err());
        let no_center = StftConfig::new(64, 16).with_center(false);
        assert!(matches!(
            stft(&[0.0; 10], &no_center, 8000),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn hop_equal_to_hann_window_is_not_invertible() {
        let cfg = StftConfig::new(64, 64);
        let x: Vec<f64> = (0..640).map(|i| (i as f64 * 0.1).sin()).collect();
        let spec = stft(&x, &cfg, 8000).unwrap();
        assert!(matches!(istft(&spec, Some(x.len())), Err(Error::NonInvertible(_))));
    }

    #[test]
    fn short_signal_round_trip() {
        let x = vec![0.3, -0.2, 0.9];
        let cfg = StftConfig::new(16, 4);
        let spec = stft(&x, &cfg, 8000).unwrap();
        let back = istft(&spec, Some(3)).unwrap();
        assert!(max_abs_diff(&x, &back) < 1e-9);
    }

    #[test]
    fn uncentered_round_trip_interior() {
        let cfg = StftConfig::new(64, 16).with_center(false);
        let x: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let spec = stft(&x, &cfg, 8000).unwrap();
        let back = istft(&spec, Some(x.len())).unwrap();
        // the first and last samples sit under a zero of the hann window
        let covered = cfg.natural_length(spec.frames());
        assert!(max_abs_diff(&x[1..covered - 1], &back[1..covered - 1]) < 1e-9);
    }

    #[test]
    fn narrow_window_round_trip() {
        let cfg = StftConfig::new(128, 16).with_win_length(64);
        let x: Vec<f64> = (0..777).map(|i| (i as f64 * 0.37).sin() * 0.5).collect();
        let spec = stft(&x, &cfg, 16000).unwrap();
        let back = istft(&spec, Some(x.len())).unwrap();
        assert!(max_abs_diff(&x, &back) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip(
            len in 256usize..4096,
            seed in any::<u64>(),
            hamming in any::<bool>(),
            quarter in any::<bool>(),
        ) {
            let mut state = seed | 1;
            let x: Vec<f64> = (0..len).map(|_| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            }).collect();
            let win = if hamming { WindowKind::Hamming } else { WindowKind::Hann };
            let hop = if quarter { 64 } else { 128 };
            let cfg = StftConfig::new(256, hop).with_window(win);
            let spec = stft(&x, &cfg, 16000).unwrap();
            let back = istft(&spec, Some(len)).unwrap();
            prop_assert!(max_abs_diff(&x, &back) <= 1e-6);
        }

        #[test]
        fn linear(a in -3.0f64..3.0, b in -3.0f64..3.0, phase in 0.0f64..6.0) {
            let x: Vec<f64> = (0..600).map(|i| (i as f64 * 0.05 + phase).sin()).collect();
            let y: Vec<f64> = (0..600).map(|i| ((i * i) % 17) as f64 / 17.0).collect();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let cfg = StftConfig::new(128, 32);
            let sx = stft(&x, &cfg, 8000).unwrap();
            let sy = stft(&y, &cfg, 8000).unwrap();
            let sm = stft(&mix, &cfg, 8000).unwrap();
            for ((m, p), q) in sm.data.iter().zip(sx.data.iter()).zip(sy.data.iter()) {
                prop_assert!((m - (p * a + q * b)).norm() < 1e-6);
            }
        }
    }
}
