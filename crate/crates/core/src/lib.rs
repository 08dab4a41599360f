//! Audio and speech DSP building blocks.
//!
//! The crate is organised bottom-up:
//!
//! * [`dsp`]: windows, FFT, forward and inverse STFT.
//! * [`features`]: power and mel spectrograms, MFCC, DCT matrix, spectral centroid.
//! * [`phase`]: Griffin-Lim reconstruction and the phase vocoder.
//! * [`filter`]: difference-equation filtering, biquad design, windowed-sinc resampling.
//! * [`wav`]: RIFF/WAVE reading and writing.
//! * [`effects`]: a sequential effects-chain engine.
//! * [`metrics`]: Si-SDR, SDR, permutation-invariant scoring and mel cepstral distortion.
//! * [`bench`]: timing harness with CSV reporting.
//!
//! Everything operates on [`AudioBuffer`] and `f64` samples. All operations are
//! pure functions of their inputs.

mod audio;
mod error;

pub mod bench;
pub mod dsp;
pub mod effects;
pub mod features;
pub mod filter;
pub mod metrics;
pub mod phase;
pub mod wav;

pub use audio::AudioBuffer;
pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Re-exported so callers can name spectrogram element types without adding a dependency.
pub use rustfft::num_complex;
pub use ndarray;
