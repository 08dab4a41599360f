use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::{Error, Result};

/// Direct-form I difference equation with zero initial state.
///
/// `a[0]·y[n] = Σ b[i]·x[n−i] − Σ_{j≥1} a[j]·y[n−j]`
pub fn lfilter(x: &[f64], b: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    let a0 = *a
        .first()
        .ok_or_else(|| Error::invalid("denominator coefficients are empty"))?;
    if a0 == 0.0 {
        return Err(Error::invalid("a[0] must be nonzero"));
    }
    let b: Vec<f64> = b.iter().map(|v| v / a0).collect();
    let a: Vec<f64> = a.iter().map(|v| v / a0).collect();
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let mut acc = 0.0;
        for (i, bi) in b.iter().enumerate().take(n + 1) {
            acc += bi * x[n - i];
        }
        for (j, aj) in a.iter().enumerate().skip(1).take(n) {
            acc -= aj * y[n - j];
        }
        y[n] = acc;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub fn numerator(&self) -> [f64; 3] {
        [self.b0, self.b1, self.b2]
    }

    pub fn denominator(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }

    /// `H(e^{jω})` for `ω` in radians per sample.
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (z1 * self.b1 + z2 * self.b2 + self.b0) / (z1 * self.a1 + z2 * self.a2 + self.a0)
    }

    /// Roots of `a0·z² + a1·z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a0 * self.a2, 0.0).sqrt();
        let two_a0 = 2.0 * self.a0;
        [(-self.a1 + disc) / two_a0, (-self.a1 - disc) / two_a0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        lfilter(x, &self.numerator(), &self.denominator())
    }
}

/// Constant 0 dB peak-gain bandpass (RBJ cookbook).
pub fn design_bandpass(center_freq: f64, sample_rate: f64, q: f64) -> Result<BiquadCoeffs> {
    if !(sample_rate > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if !(center_freq > 0.0 && center_freq < sample_rate / 2.0) {
        return Err(Error::invalid(format!(
            "center frequency {center_freq} Hz must lie strictly inside (0, {})",
            sample_rate / 2.0
        )));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!("Q must be > 0, got {q}")));
    }
    let w0 = 2.0 * PI * center_freq / sample_rate;
    let alpha = w0.sin() / (2.0 * q);
    Ok(BiquadCoeffs {
        b0: alpha,
        b1: 0.0,
        b2: -alpha,
        a0: 1.0 + alpha,
        a1: -2.0 * w0.cos(),
        a2: 1.0 - alpha,
    })
}
