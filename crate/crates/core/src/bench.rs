//! Timing harness for the heavy feature and phase operations.
//!
//! Each operation is executed once untimed as warmup, then timed over
//! `trials` trials. A trial is `reps` back-to-back executions measured with a
//! monotonic clock, so `mean_seconds` is the mean wall time of one batch of
//! `reps` runs and `stderr_seconds` is the standard error of that mean across
//! trials.

use std::collections::HashMap;
use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{stft, ComplexSpectrogram, StftConfig};
use crate::features::{complex_norm, mfcc, power_spectrogram, spectral_centroid, MelParams};
use crate::phase::{griffin_lim, phase_vocoder, GriffinLimConfig};
use crate::{AudioBuffer, Error, Result};

pub const DEFAULT_TRIALS: usize = 5;
pub const CSV_HEADER: [&str; 6] = ["op", "reps", "trials", "mean_s", "stderr_s", "input"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchOp {
    Spectrogram,
    Mfcc,
    SpectralCentroid,
    GriffinLim,
    PhaseVocoder,
}

impl BenchOp {
    pub const ALL: [BenchOp; 5] = [
        BenchOp::Spectrogram,
        BenchOp::Mfcc,
        BenchOp::SpectralCentroid,
        BenchOp::GriffinLim,
        BenchOp::PhaseVocoder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Spectrogram => "spectrogram",
            BenchOp::Mfcc => "mfcc",
            BenchOp::SpectralCentroid => "spectral_centroid",
            BenchOp::GriffinLim => "griffin_lim",
            BenchOp::PhaseVocoder => "phase_vocoder",
        }
    }

    /// 100 runs per trial for the cheap ops, 10 for the iterative ones.
    pub fn default_reps(self) -> usize {
        match self {
            BenchOp::Spectrogram | BenchOp::Mfcc | BenchOp::SpectralCentroid => 100,
            BenchOp::GriffinLim | BenchOp::PhaseVocoder => 10,
        }
    }

    /// Parses a comma-separated list, keeping request order.
    pub fn parse_list(list: &str) -> Result<Vec<BenchOp>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromStr for BenchOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchOp::ALL
            .into_iter()
            .find(|op| op.name() == s || (s == "centroid" && *op == BenchOp::SpectralCentroid))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown benchmark op `{s}` (expected one of {})",
                    BenchOp::ALL.map(BenchOp::name).join(", ")
                ))
            })
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Workload parameters shared by every op.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub stft: StftConfig,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub griffin_lim_iters: usize,
    pub griffin_lim_momentum: f64,
    pub vocoder_rate: f64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            stft: StftConfig::new(2048, 512),
            n_mels: 128,
            n_mfcc: 40,
            griffin_lim_iters: 32,
            griffin_lim_momentum: 0.99,
            vocoder_rate: 1.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub op_name: String,
    pub repetitions_per_trial: usize,
    pub trials: usize,
    pub mean_seconds: f64,
    /// Zero when only one trial ran; see `single_trial`.
    pub stderr_seconds: f64,
    pub single_trial: bool,
    pub input_descriptor: String,
}

/// Mean and standard error (sample standard deviation over √n).
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Seeded uniform white noise in `[-1, 1)`.
pub fn white_noise(duration_s: f64, sample_rate: u32, seed: u64) -> Result<AudioBuffer> {
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid(format!("duration must be >= 0, got {duration_s}")));
    }
    let frames = (duration_s * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..frames).map(|_| rng.random_range(-1.0..1.0)).collect();
    AudioBuffer::from_mono(samples, sample_rate)
}

pub fn describe_input(input: &AudioBuffer) -> String {
    format!(
        "{}ch {:.3}s @ {} Hz",
        input.channels(),
        input.duration_secs(),
        input.sample_rate()
    )
}

/// Precomputed inputs so timed regions contain only the op itself.
struct Workload<'a> {
    signal: Vec<f64>,
    sample_rate: u32,
    settings: &'a BenchSettings,
    mel: MelParams,
    magnitude: Array2<f64>,
    spectrogram: ComplexSpectrogram,
    gl: GriffinLimConfig,
}

impl<'a> Workload<'a> {
    fn new(input: &AudioBuffer, settings: &'a BenchSettings) -> Result<Self> {
        let signal = input.channel(0).to_vec();
        let sample_rate = input.sample_rate();
        let spectrogram = stft(&signal, &settings.stft, sample_rate)?;
        let magnitude = complex_norm(&spectrogram, 1.0)?;
        let gl = GriffinLimConfig::new(settings.stft.clone())
            .with_iterations(settings.griffin_lim_iters)
            .with_momentum(settings.griffin_lim_momentum)
            .with_length(signal.len());
        Ok(Self {
            signal,
            sample_rate,
            settings,
            mel: MelParams::new(settings.n_mels),
            magnitude,
            spectrogram,
            gl,
        })
    }

    fn run(&self, op: BenchOp) -> Result<()> {
        let cfg = &self.settings.stft;
        match op {
            BenchOp::Spectrogram => {
                black_box(power_spectrogram(&self.signal, self.sample_rate, cfg)?);
            }
            BenchOp::Mfcc => {
                black_box(mfcc(
                    &self.signal,
                    self.sample_rate,
                    cfg,
                    &self.mel,
                    self.settings.n_mfcc,
                    1e-10,
                )?);
            }
            BenchOp::SpectralCentroid => {
                black_box(spectral_centroid(&self.signal, self.sample_rate, cfg)?);
            }
            BenchOp::GriffinLim => {
                black_box(griffin_lim(&self.magnitude, &self.gl, self.sample_rate)?);
            }
            BenchOp::PhaseVocoder => {
                black_box(phase_vocoder(&self.spectrogram, self.settings.vocoder_rate)?);
            }
        }
        Ok(())
    }
}

/// Times each op in request order with default workload settings.
///
/// `reps` overrides the per-op repetition count; missing ops use
/// [`BenchOp::default_reps`].
pub fn bench_run(
    ops: &[BenchOp],
    trials: usize,
    reps: &HashMap<BenchOp, usize>,
    input: &AudioBuffer,
) -> Result<Vec<BenchReport>> {
    bench_run_with(ops, trials, reps, input, &BenchSettings::default())
}

pub fn bench_run_with(
    ops: &[BenchOp],
    trials: usize,
    reps: &HashMap<BenchOp, usize>,
    input: &AudioBuffer,
    settings: &BenchSettings,
) -> Result<Vec<BenchReport>> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if input.frames() == 0 {
        return Err(Error::invalid("benchmark input is empty"));
    }
    let workload = Workload::new(input, settings)?;
    let descriptor = describe_input(input);
    ops.iter()
        .map(|&op| {
            let n = reps.get(&op).copied().unwrap_or_else(|| op.default_reps());
            if n == 0 {
                return Err(Error::invalid(format!("{op}: repetitions must be positive")));
            }
            workload.run(op)?;
            let mut times = Vec::with_capacity(trials);
            for _ in 0..trials {
                let start = Instant::now();
                for _ in 0..n {
                    workload.run(op)?;
                }
                times.push(start.elapsed().as_secs_f64());
            }
            let (mean, stderr) = mean_and_stderr(&times);
            Ok(BenchReport {
                op_name: op.name().to_string(),
                repetitions_per_trial: n,
                trials,
                mean_seconds: mean,
                stderr_seconds: stderr,
                single_trial: trials < 2,
                input_descriptor: descriptor.clone(),
            })
        })
        .collect()
}

/// Writes `op,reps,trials,mean_s,stderr_s,input` rows with a header line.
pub fn write_csv<W: Write>(reports: &[BenchReport], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_HEADER)?;
    for r in reports {
        csv.write_record([
            r.op_name.clone(),
            r.repetitions_per_trial.to_string(),
            r.trials.to_string(),
            format!("{:.9e}", r.mean_seconds),
            format!("{:.9e}", r.stderr_seconds),
            r.input_descriptor.clone(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
