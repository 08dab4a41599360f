//! Spectral features: power and mel spectrograms, MFCC, spectral centroid.

mod dct;
mod mel;
mod spectral;

pub use dct::{dct_matrix, DctNorm};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank, MelParams, MelScale};
pub use spectral::{
    amplitude_to_db, complex_norm, mel_spectrogram, mfcc, power_spectrogram, spectral_centroid,
    spectral_centroid_from_magnitude, FeatureMatrix,
};
