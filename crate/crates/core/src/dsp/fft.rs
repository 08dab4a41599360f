use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn check_len(n: usize) -> Result<()> {
    if is_power_of_two(n) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "FFT length must be a power of two, got {n}"
        )))
    }
}

/// Forward DFT, `X[k] = Σ x[n]·e^{−2πi·kn/N}`. `N` must be a power of two.
pub fn fft(signal: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(signal.len())?;
    let mut buf = signal.to_vec();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    Ok(buf)
}

/// Inverse DFT including the `1/N` factor, so `ifft(fft(x)) == x`.
pub fn ifft(spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(spectrum.len())?;
    let mut buf = spectrum.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    Ok(buf)
}
