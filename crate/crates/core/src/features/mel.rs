use ndarray::Array2;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MelScale {
    #[default]
    Htk,
}

/// HTK mel: `2595·log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) {
        return Err(Error::invalid(format!("frequency must be >= 0, got {hz}")));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if !(mel >= 0.0) {
        return Err(Error::invalid(format!("mel value must be >= 0, got {mel}")));
    }
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

/// Filterbank construction parameters, minus the sample rate and FFT size.
#[derive(Debug, Clone, PartialEq)]
pub struct MelParams {
    pub n_mels: usize,
    pub f_min: f64,
    /// Upper edge; `None` means Nyquist.
    pub f_max: Option<f64>,
}

impl MelParams {
    pub fn new(n_mels: usize) -> Self {
        Self {
            n_mels,
            f_min: 0.0,
            f_max: None,
        }
    }

    pub fn build(&self, sample_rate: u32, n_fft: usize) -> Result<MelFilterbank> {
        let f_max = self.f_max.unwrap_or(sample_rate as f64 / 2.0);
        mel_filterbank(sample_rate, n_fft, self.n_mels, self.f_min, f_max)
    }
}

/// Triangular filters on a mel-spaced grid, `[n_mels × freq_bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Array2<f64>,
    /// Half-open nonzero bin range of each row.
    support: Vec<(usize, usize)>,
    f_min: f64,
    f_max: f64,
    scale: MelScale,
}

impl MelFilterbank {
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn freq_bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn scale(&self) -> MelScale {
        self.scale
    }

    /// Nonzero bin range `[start, end)` of filter `m`.
    pub fn support(&self, m: usize) -> (usize, usize) {
        self.support[m]
    }

    /// Appends the `n_mels` band energies of one spectrum frame to `out`.
    pub(crate) fn apply_frame(&self, frame: &[f64], out: &mut Vec<f64>) {
        for (m, &(lo, hi)) in self.support.iter().enumerate() {
            let w = self.weights.row(m);
            out.push((lo..hi).map(|k| w[k] * frame[k]).sum::<f64>());
        }
    }

    /// `weights · spectrum` for a `[freq_bins × frames]` spectrum.
    pub fn apply(&self, spectrum: &Array2<f64>) -> Result<Array2<f64>> {
        if spectrum.nrows() != self.freq_bins() {
            return Err(Error::invalid(format!(
                "spectrum has {} bins, filterbank expects {}",
                spectrum.nrows(),
                self.freq_bins()
            )));
        }
        let n_mels = self.n_mels();
        let mut raw = Vec::with_capacity(n_mels * spectrum.ncols());
        let mut column = vec![0.0; spectrum.nrows()];
        for col in spectrum.columns() {
            match col.as_slice() {
                Some(c) => column.copy_from_slice(c),
                None => column.iter_mut().zip(col).for_each(|(d, &s)| *d = s),
            }
            self.apply_frame(&column, &mut raw);
        }
        let out = Array2::from_shape_vec((spectrum.ncols(), n_mels), raw)
            .map_err(|e| Error::invalid(e.to_string()))?
            .reversed_axes();
        Ok(out)
    }
}

pub fn mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels == 0 {
        return Err(Error::invalid("n_mels must be at least 1"));
    }
    if n_fft < 2 {
        return Err(Error::invalid("n_fft must be at least 2"));
    }
    if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
        return Err(Error::invalid(format!(
            "need 0 <= f_min ({f_min}) < f_max ({f_max}) <= nyquist ({nyquist})"
        )));
    }
    let bins = n_fft / 2 + 1;
    let bin_hz: Vec<f64> = (0..bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();

    let m_lo = hz_to_mel(f_min)?;
    let m_hi = hz_to_mel(f_max)?;
    let step = (m_hi - m_lo) / (n_mels + 1) as f64;
    let edges = (0..n_mels + 2)
        .map(|i| mel_to_hz(m_lo + step * i as f64))
        .collect::<Result<Vec<_>>>()?;

    let mut weights = Array2::zeros((n_mels, bins));
    let mut support = Vec::with_capacity(n_mels);
    for m in 0..n_mels {
        let (lo, peak, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut range: Option<(usize, usize)> = None;
        for (k, &f) in bin_hz.iter().enumerate() {
            let rising = (f - lo) / (peak - lo);
            let falling = (hi - f) / (hi - peak);
            let w = rising.min(falling).max(0.0);
            if w > 0.0 {
                weights[[m, k]] = w;
                range = Some(range.map_or((k, k + 1), |(s, _)| (s, k + 1)));
            }
        }
        match range {
            Some(r) => support.push(r),
            None => {
                return Err(Error::DegenerateFilterbank(format!(
                    "filter {m} ({lo:.1}-{hi:.1} Hz) covers no FFT bin; reduce n_mels ({n_mels}) or raise n_fft ({n_fft})"
                )))
            }
        }
    }
    Ok(MelFilterbank {
        weights,
        support,
        f_min,
        f_max,
        scale: MelScale::Htk,
    })
}
