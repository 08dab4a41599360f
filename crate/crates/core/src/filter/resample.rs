use std::f64::consts::PI;

use crate::{AudioBuffer, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResampleWindow {
    Hann,
    Kaiser { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSpec {
    pub orig_rate: u32,
    pub new_rate: u32,
    /// Zero crossings of the sinc on each side of the kernel center.
    pub lowpass_filter_width: usize,
    /// Cutoff as a fraction of the lower Nyquist frequency, in `(0, 1]`.
    pub rolloff: f64,
    pub window: ResampleWindow,
}

impl ResampleSpec {
    pub fn new(orig_rate: u32, new_rate: u32) -> Self {
        Self {
            orig_rate,
            new_rate,
            lowpass_filter_width: 64,
            rolloff: 0.99,
            window: ResampleWindow::Kaiser { beta: 14.769656 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orig_rate == 0 || self.new_rate == 0 {
            return Err(Error::invalid("sample rates must be positive"));
        }
        if self.lowpass_filter_width == 0 {
            return Err(Error::invalid("lowpass_filter_width must be positive"));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::invalid(format!(
                "rolloff must be in (0, 1], got {}",
                self.rolloff
            )));
        }
        if let ResampleWindow::Kaiser { beta } = self.window {
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::invalid(format!("kaiser beta must be >= 0, got {beta}")));
            }
        }
        Ok(())
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len as u64 * self.new_rate as u64).div_ceil(self.orig_rate as u64) as usize
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let quarter_sq = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= quarter_sq / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// One windowed-sinc kernel per output phase.
struct Polyphase {
    orig: usize,
    width: usize,
    kernels: Vec<Vec<f64>>,
}

impl Polyphase {
    fn build(spec: &ResampleSpec) -> Self {
        let g = gcd(spec.orig_rate as u64, spec.new_rate as u64);
        let orig = (spec.orig_rate as u64 / g) as usize;
        let new = (spec.new_rate as u64 / g) as usize;
        let lpw = spec.lowpass_filter_width as f64;
        let base_freq = orig.min(new) as f64 * spec.rolloff;
        let width = (lpw * orig as f64 / base_freq).ceil() as usize;
        let taps = 2 * width + orig;
        let scale = base_freq / orig as f64;
        let kaiser_norm = match spec.window {
            ResampleWindow::Kaiser { beta } => bessel_i0(beta),
            ResampleWindow::Hann => 1.0,
        };

        let kernels = (0..new)
            .map(|phase| {
                (0..taps)
                    .map(|k| {
                        let idx = (k as f64 - width as f64) / orig as f64;
                        let t = ((idx - phase as f64 / new as f64) * base_freq).clamp(-lpw, lpw);
                        let window = match spec.window {
                            ResampleWindow::Hann => (t * PI / lpw / 2.0).cos().powi(2),
                            ResampleWindow::Kaiser { beta } => {
                                let r = t / lpw;
                                bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / kaiser_norm
                            }
                        };
                        let arg = t * PI;
                        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
                        sinc * window * scale
                    })
                    .collect()
            })
            .collect();
        Self {
            orig,
            width,
            kernels,
        }
    }

    fn run(&self, x: &[f64], out_len: usize) -> Vec<f64> {
        let len = x.len() as isize;
        let mut out = Vec::with_capacity(out_len);
        'blocks: for block in 0.. {
            let start = (block * self.orig) as isize - self.width as isize;
            for kernel in &self.kernels {
                if out.len() == out_len {
                    break 'blocks;
                }
                let mut acc = 0.0;
                for (k, c) in kernel.iter().enumerate() {
                    let pos = start + k as isize;
                    if pos >= 0 && pos < len {
                        acc += c * x[pos as usize];
                    }
                }
                out.push(acc);
            }
        }
        out
    }
}

/// Band-limited sample-rate conversion of one channel.
pub fn resample_signal(x: &[f64], spec: &ResampleSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.orig_rate == spec.new_rate {
        return Ok(x.to_vec());
    }
    let out_len = spec.output_len(x.len());
    if out_len == 0 {
        return Ok(Vec::new());
    }
    Ok(Polyphase::build(spec).run(x, out_len))
}

/// Resamples every channel. The buffer's rate must equal `spec.orig_rate`.
pub fn resample(buffer: &AudioBuffer, spec: &ResampleSpec) -> Result<AudioBuffer> {
    spec.validate()?;
    if buffer.sample_rate() != spec.orig_rate {
        return Err(Error::invalid(format!(
            "buffer is at {} Hz but resampler expects {} Hz",
            buffer.sample_rate(),
            spec.orig_rate
        )));
    }
    if spec.orig_rate == spec.new_rate {
        return Ok(buffer.clone());
    }
    let poly = Polyphase::build(spec);
    let out_len = spec.output_len(buffer.frames());
    buffer.map_channels(spec.new_rate, |c| Ok(poly.run(c, out_len)))
}
