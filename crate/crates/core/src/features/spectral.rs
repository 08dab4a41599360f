use ndarray::{Array2, ArrayView1};

use super::dct::{dct_matrix, DctNorm};
use super::mel::MelParams;
use crate::dsp::{ComplexSpectrogram, StftConfig, StftEngine};
use crate::Complex64;
use crate::{Error, Result};

/// Floor applied before taking logarithms or decibels.
const POWER_FLOOR: f64 = 1e-10;

/// Real-valued time-frequency features, `[coefficients × frames]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    /// Frames per second.
    pub frame_rate: f64,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f64>, frame_rate: f64) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix contains non-finite values"));
        }
        Ok(Self { data, frame_rate })
    }

    pub fn coeffs(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }
}

fn check_power(power: f64) -> Result<()> {
    if power > 0.0 && power.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("power must be > 0, got {power}")))
    }
}

fn norm_pow(z: Complex64, power: f64) -> f64 {
    let sq = z.norm_sqr();
    if power == 2.0 {
        sq
    } else if power == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(power / 2.0)
    }
}

/// Elementwise `|z|^power`.
pub fn complex_norm(spec: &ComplexSpectrogram, power: f64) -> Result<Array2<f64>> {
    check_power(power)?;
    Ok(spec.data.mapv(|z| norm_pow(z, power)))
}

/// Streams `|stft(x)|^power` frame by frame without keeping the complex spectrogram.
fn magnitude_frames(
    signal: &[f64],
    config: &StftConfig,
    power: f64,
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<usize> {
    check_power(power)?;
    let mut engine = StftEngine::new(config)?;
    let mut column = vec![0.0; config.freq_bins()];
    engine.forward_frames(signal, |t, spectrum| {
        for (c, &z) in column.iter_mut().zip(spectrum) {
            *c = norm_pow(z, power);
        }
        sink(t, &column);
    })
}

/// Collects per-frame rows into a `[rows × frames]` array.
fn from_frames(rows: usize, frames: usize, raw: Vec<f64>) -> Result<Array2<f64>> {
    Ok(Array2::from_shape_vec((frames, rows), raw)
        .map_err(|e| Error::invalid(e.to_string()))?
        .reversed_axes())
}

/// `|stft(x)|^power` with the exponent taken from the config (2 when unset).
pub fn power_spectrogram(signal: &[f64], sample_rate: u32, config: &StftConfig) -> Result<FeatureMatrix> {
    let bins = config.freq_bins();
    let mut raw = Vec::with_capacity(bins * config.frame_count(signal.len()));
    let frames = magnitude_frames(signal, config, config.power.unwrap_or(2.0), |_, col| {
        raw.extend_from_slice(col)
    })?;
    FeatureMatrix::new(from_frames(bins, frames, raw)?, frame_rate(sample_rate, config))
}

fn frame_rate(sample_rate: u32, config: &StftConfig) -> f64 {
    sample_rate as f64 / config.hop_length as f64
}

pub fn mel_spectrogram(
    signal: &[f64],
    sample_rate: u32,
    config: &StftConfig,
    mel: &MelParams,
) -> Result<FeatureMatrix> {
    let fb = mel.build(sample_rate, config.n_fft)?;
    let mut raw = Vec::with_capacity(fb.n_mels() * config.frame_count(signal.len()));
    let frames = magnitude_frames(signal, config, config.power.unwrap_or(2.0), |_, col| {
        fb.apply_frame(col, &mut raw)
    })?;
    FeatureMatrix::new(from_frames(fb.n_mels(), frames, raw)?, frame_rate(sample_rate, config))
}

/// Mel-frequency cepstral coefficients: orthonormal DCT-II of the natural log
/// of the floored mel power spectrogram.
pub fn mfcc(
    signal: &[f64],
    sample_rate: u32,
    config: &StftConfig,
    mel: &MelParams,
    n_mfcc: usize,
    log_floor: f64,
) -> Result<FeatureMatrix> {
    if n_mfcc == 0 || n_mfcc > mel.n_mels {
        return Err(Error::invalid(format!(
            "need 1 <= n_mfcc ({n_mfcc}) <= n_mels ({})",
            mel.n_mels
        )));
    }
    if !(log_floor > 0.0) {
        return Err(Error::invalid(format!("log_floor must be > 0, got {log_floor}")));
    }
    let dct = dct_matrix(n_mfcc, mel.n_mels, DctNorm::Ortho)?;
    let melspec = mel_spectrogram(signal, sample_rate, config, mel)?;
    let log_mel = melspec.data.mapv(|p| p.max(log_floor).ln());
    FeatureMatrix::new(dct.dot(&log_mel), melspec.frame_rate)
}

/// Magnitude-weighted mean frequency of each frame, in Hz.
pub fn spectral_centroid(signal: &[f64], sample_rate: u32, config: &StftConfig) -> Result<Vec<f64>> {
    let bin_hz = sample_rate as f64 / config.n_fft as f64;
    let mut out = Vec::with_capacity(config.frame_count(signal.len()));
    magnitude_frames(signal, config, 1.0, |_, col| {
        out.push(frame_centroid(ArrayView1::from(col), bin_hz))
    })?;
    Ok(out)
}

fn frame_centroid(col: ArrayView1<f64>, bin_hz: f64) -> f64 {
    let total: f64 = col.sum();
    if total > 0.0 {
        let weighted: f64 = col
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * bin_hz * m)
            .sum();
        weighted / total
    } else {
        0.0
    }
}

/// Centroid of a `[n_fft/2 + 1 × frames]` magnitude spectrogram. Silent frames give 0.
pub fn spectral_centroid_from_magnitude(
    magnitude: &Array2<f64>,
    sample_rate: u32,
    n_fft: usize,
) -> Result<Vec<f64>> {
    if magnitude.nrows() != n_fft / 2 + 1 {
        return Err(Error::invalid(format!(
            "magnitude has {} bins, n_fft {n_fft} implies {}",
            magnitude.nrows(),
            n_fft / 2 + 1
        )));
    }
    if magnitude.ncols() == 0 {
        return Err(Error::invalid("spectral centroid needs at least one frame"));
    }
    let bin_hz = sample_rate as f64 / n_fft as f64;
    Ok(magnitude
        .columns()
        .into_iter()
        .map(|col| frame_centroid(col, bin_hz))
        .collect())
}

/// `10·log10(max(p, 1e-10))`, optionally clamped to within `top_db` of the maximum.
pub fn amplitude_to_db(power: &Array2<f64>, top_db: Option<f64>) -> Result<Array2<f64>> {
    if power.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::invalid("power values must be non-negative"));
    }
    let mut db = power.mapv(|p| 10.0 * p.max(POWER_FLOOR).log10());
    if let Some(top) = top_db {
        if !(top >= 0.0) {
            return Err(Error::invalid(format!("top_db must be >= 0, got {top}")));
        }
        let peak = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = peak - top;
        db.mapv_inplace(|v| v.max(floor));
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use ndarray::array;
    use rustfft::num_complex::Complex64;

    use super::*;
    use crate::features::mel_filterbank;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    /// Power spectrogram from a naive DFT of explicitly windowed, reflect-padded frames.
    fn brute_power(x: &[f64], n_fft: usize, hop: usize) -> Array2<f64> {
        let pad = n_fft / 2;
        let len = x.len() as isize;
        let padded: Vec<f64> = (-(pad as isize)..len + pad as isize)
            .map(|i| {
                let mut j = i;
                if j < 0 {
                    j = -j;
                }
                if j >= len {
                    j = 2 * (len - 1) - j;
                }
                x[j as usize]
            })
            .collect();
        let frames = 1 + x.len() / hop;
        let bins = n_fft / 2 + 1;
        Array2::from_shape_fn((bins, frames), |(k, t)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..n_fft {
                let w = 0.5 - 0.5 * (2.0 * PI * n as f64 / n_fft as f64).cos();
                let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                acc += Complex64::from_polar(padded[t * hop + n] * w, ang);
            }
            acc.norm_sqr()
        })
    }

    #[test]
    fn complex_norm_examples() {
        let cfg = StftConfig::new(2, 1);
        let data = array![[Complex64::new(3.0, 4.0)], [Complex64::new(0.0, 0.0)]];
        let spec = ComplexSpectrogram::new(data, cfg, 8000).unwrap();
        assert_eq!(complex_norm(&spec, 1.0).unwrap()[[0, 0]], 5.0);
        assert!((complex_norm(&spec, 2.0).unwrap()[[0, 0]] - 25.0).abs() < 1e-12);
        assert_eq!(complex_norm(&spec, 0.7).unwrap()[[1, 0]], 0.0);
        assert!(complex_norm(&spec, 0.0).is_err());
        assert!(complex_norm(&spec, -1.0).is_err());
    }

    #[test]
    fn mel_spectrogram_matches_composition() {
        let x = noise(3000, 7);
        let cfg = StftConfig::new(256, 64);
        let params = MelParams::new(24);
        let got = mel_spectrogram(&x, 16000, &cfg, &params).unwrap();
        let fb = mel_filterbank(16000, 256, 24, 0.0, 8000.0).unwrap();
        let expected = fb.weights().dot(&brute_power(&x, 256, 64));
        for (a, b) in got.data.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-12), "{a} vs {b}");
        }
        assert_eq!(got.frame_rate, 250.0);
    }

    #[test]
    fn mel_spectrogram_power_law() {
        let x = noise(2048, 3);
        let x2: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let cfg = StftConfig::new(512, 128);
        let params = MelParams::new(40);
        let a = mel_spectrogram(&x, 22050, &cfg, &params).unwrap();
        let b = mel_spectrogram(&x2, 22050, &cfg, &params).unwrap();
        for (p, q) in a.data.iter().zip(b.data.iter()) {
            assert!((q - 4.0 * p).abs() <= 1e-9 * q.abs().max(1e-12));
        }
        let silent = mel_spectrogram(&[0.0; 2048], 22050, &cfg, &params).unwrap();
        assert!(silent.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mfcc_shape_and_gain() {
        let x = noise(4000, 11);
        let cfg = StftConfig::new(512, 128);
        let params = MelParams::new(32);
        let base = mfcc(&x, 16000, &cfg, &params, 13, 1e-10).unwrap();
        assert_eq!(base.coeffs(), 13);
        assert_eq!(base.frames(), 1 + 4000 / 128);

        let g = 0.3;
        let scaled: Vec<f64> = x.iter().map(|v| v * g).collect();
        let shifted = mfcc(&scaled, 16000, &cfg, &params, 13, 1e-10).unwrap();
        let diff = &shifted.data - &base.data;
        for row in 1..13 {
            for v in diff.row(row) {
                assert!(v.abs() < 1e-5, "row {row}: {v}");
            }
        }
        // row 0 carries sqrt(n_mels)·log(g²)
        let expected0 = (32f64).sqrt() * (g * g).ln();
        for v in diff.row(0) {
            assert!((v - expected0).abs() < 1e-6);
        }
    }

    #[test]
    fn mfcc_rejects_too_many_coefficients() {
        let cfg = StftConfig::new(256, 64);
        assert!(mfcc(&[0.1; 512], 8000, &cfg, &MelParams::new(10), 11, 1e-10).is_err());
    }

    #[test]
    fn centroid_of_single_bin() {
        let mut mag = Array2::zeros((5, 2));
        mag[[3, 0]] = 1.0;
        let c = spectral_centroid_from_magnitude(&mag, 8000, 8).unwrap();
        assert_eq!(c, vec![3000.0, 0.0]);
    }

    #[test]
    fn centroid_of_pure_tone() {
        let sr = 16000;
        let n_fft = 256;
        let k = 20;
        let f = k as f64 * sr as f64 / n_fft as f64;
        let x: Vec<f64> = (0..4096).map(|n| (2.0 * PI * f * n as f64 / sr as f64).sin()).collect();
        let cfg = StftConfig::new(n_fft, 64);
        let c = spectral_centroid(&x, sr, &cfg).unwrap();
        let bin_width = sr as f64 / n_fft as f64;
        for v in &c[2..c.len() - 2] {
            assert!((v - f).abs() <= bin_width, "{v} vs {f}");
        }
    }

    #[test]
    fn centroid_bounded() {
        let x = noise(5000, 99);
        let c = spectral_centroid(&x, 22050, &StftConfig::new(512, 256)).unwrap();
        assert!(c.iter().all(|&v| (0.0..=11025.0).contains(&v)));
    }

    #[test]
    fn db_conversion() {
        let p = array![[1.0, 10.0, 0.0]];
        let db = amplitude_to_db(&p, None).unwrap();
        assert_eq!(db[[0, 0]], 0.0);
        assert!((db[[0, 1]] - 10.0).abs() < 1e-12);
        assert!((db[[0, 2]] + 100.0).abs() < 1e-9);
        let clamped = amplitude_to_db(&p, Some(20.0)).unwrap();
        assert!((clamped[[0, 2]] + 10.0).abs() < 1e-9);
        assert!(amplitude_to_db(&array![[-1.0]], None).is_err());
    }
}
