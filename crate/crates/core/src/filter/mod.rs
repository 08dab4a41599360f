//! IIR filtering, biquad design and sample-rate conversion.

mod biquad;
mod resample;

pub use biquad::{design_bandpass, lfilter, BiquadCoeffs};
pub use resample::{resample, resample_signal, ResampleSpec, ResampleWindow};
