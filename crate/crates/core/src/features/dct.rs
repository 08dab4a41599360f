use std::f64::consts::PI;

use ndarray::Array2;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DctNorm {
    #[default]
    Ortho,
}

/// DCT-II basis, `[n_coeffs × n_inputs]`, orthonormally scaled.
pub fn dct_matrix(n_coeffs: usize, n_inputs: usize, norm: DctNorm) -> Result<Array2<f64>> {
    if n_coeffs == 0 || n_coeffs > n_inputs {
        return Err(Error::invalid(format!(
            "need 1 <= n_coeffs ({n_coeffs}) <= n_inputs ({n_inputs})"
        )));
    }
    let DctNorm::Ortho = norm;
    let n = n_inputs as f64;
    Ok(Array2::from_shape_fn((n_coeffs, n_inputs), |(k, i)| {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
    }))
}
