use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "rectangular" | "rect" | "boxcar" => Ok(WindowKind::Rectangular),
            other => Err(Error::invalid(format!("unknown window kind `{other}`"))),
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
            WindowKind::Rectangular => "rectangular",
        })
    }
}

/// Generates a window of `length` samples.
///
/// A periodic window of length `N` is the first `N` samples of the symmetric
/// window of length `N + 1`, which is what overlap-add analysis wants.
pub fn make_window(kind: WindowKind, length: usize, periodic: bool) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::invalid("window length must be at least 1"));
    }
    let denom = if periodic { length } else { length - 1 };
    if denom == 0 {
        // symmetric window of length 1
        return Ok(vec![1.0]);
    }
    let (a0, a1) = match kind {
        WindowKind::Rectangular => return Ok(vec![1.0; length]),
        WindowKind::Hann => (0.5, 0.5),
        WindowKind::Hamming => (0.54, 0.46),
    };
    Ok((0..length)
        .map(|n| a0 - a1 * (2.0 * PI * n as f64 / denom as f64).cos())
        .map(|w| w.clamp(0.0, 1.0))
        .collect())
}
