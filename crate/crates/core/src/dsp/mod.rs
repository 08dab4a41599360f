//! Windows, FFT and the short-time Fourier transform.

mod fft;
mod stft;
mod window;

pub use fft::{fft, ifft, is_power_of_two};
pub use stft::{istft, stft, ComplexSpectrogram, StftConfig};
pub(crate) use stft::StftEngine;
pub use window::{make_window, WindowKind};
