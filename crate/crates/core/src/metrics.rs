//! Separation and synthesis quality metrics.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Sub;
use std::str::FromStr;

use itertools::Itertools;

use crate::features::FeatureMatrix;
use crate::{Error, Result};

/// Residual-to-target energy ratios at or below this count as a perfect match (> 200 dB).
const PERFECT_RATIO: f64 = 1e-20;
/// Largest source count `pit_score` will enumerate (8! permutations).
pub const MAX_PIT_SOURCES: usize = 8;

/// A decibel value that may be an exact infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Db {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Db {
    /// `10·log10(num/den)` with explicit sentinels for empty numerator or denominator.
    fn ratio(num: f64, den: f64) -> Self {
        if den <= PERFECT_RATIO * num {
            Db::PosInf
        } else if num == 0.0 {
            Db::NegInf
        } else {
            Db::Finite(10.0 * (num / den).log10())
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Db::Finite(v) => v,
            Db::PosInf => f64::INFINITY,
            Db::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Db::Finite(_))
    }

    fn rank(self) -> u8 {
        match self {
            Db::NegInf => 0,
            Db::Finite(_) => 1,
            Db::PosInf => 2,
        }
    }

    /// Mean of several values; any `-inf` dominates, then any `+inf`.
    pub fn mean(values: &[Db]) -> Db {
        if values.iter().any(|v| *v == Db::NegInf) {
            Db::NegInf
        } else if values.iter().any(|v| *v == Db::PosInf) {
            Db::PosInf
        } else {
            let sum: f64 = values.iter().map(|v| v.value()).sum();
            Db::Finite(sum / values.len() as f64)
        }
    }
}

impl PartialOrd for Db {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Db::Finite(a), Db::Finite(b)) => a.partial_cmp(b),
            _ => Some(self.rank().cmp(&other.rank())),
        }
    }
}

/// Differences of equal infinities are zero, so `x − x == 0` always holds.
impl Sub for Db {
    type Output = Db;

    fn sub(self, rhs: Db) -> Db {
        match (self, rhs) {
            (Db::Finite(a), Db::Finite(b)) => Db::Finite(a - b),
            (a, b) if a == b => Db::Finite(0.0),
            (Db::PosInf, _) | (_, Db::NegInf) => Db::PosInf,
            _ => Db::NegInf,
        }
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Db::Finite(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Db::PosInf => f.write_str("inf"),
            Db::NegInf => f.write_str("-inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SiSdr,
    Sdr,
}

impl Metric {
    pub fn eval(self, estimate: &[f64], reference: &[f64]) -> Result<Db> {
        match self {
            Metric::SiSdr => si_sdr(estimate, reference),
            Metric::Sdr => sdr(estimate, reference),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "si-sdr" | "si_sdr" => Ok(Metric::SiSdr),
            "sdr" => Ok(Metric::Sdr),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

fn zero_mean_pair(estimate: &[f64], reference: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if estimate.len() != reference.len() {
        return Err(Error::invalid(format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    if reference.len() < 2 {
        return Err(Error::invalid("signals need at least 2 samples"));
    }
    let center = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| v - mean).collect::<Vec<_>>()
    };
    let (est, reference) = (center(estimate), center(reference));
    if reference.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("reference is zero after mean removal"));
    }
    Ok((est, reference))
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Scale-invariant signal-to-distortion ratio.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<Db> {
    let (est, reference) = zero_mean_pair(estimate, reference)?;
    let dot: f64 = est.iter().zip(&reference).map(|(e, r)| e * r).sum();
    let alpha = dot / energy(&reference);
    let target: Vec<f64> = reference.iter().map(|r| alpha * r).collect();
    let residual: f64 = est
        .iter()
        .zip(&target)
        .map(|(e, t)| (e - t).powi(2))
        .sum();
    Ok(Db::ratio(energy(&target), residual))
}

/// Plain energy-ratio SDR, `‖ref‖² / ‖est − ref‖²`, on zero-mean signals.
pub fn sdr(estimate: &[f64], reference: &[f64]) -> Result<Db> {
    let (est, reference) = zero_mean_pair(estimate, reference)?;
    let residual: f64 = est
        .iter()
        .zip(&reference)
        .map(|(e, r)| (e - r).powi(2))
        .sum();
    Ok(Db::ratio(energy(&reference), residual))
}

/// `metric(estimate) − metric(mixture)` against the same reference.
pub fn improvement(estimate: &[f64], reference: &[f64], mixture: &[f64], metric: Metric) -> Result<Db> {
    Ok(metric.eval(estimate, reference)? - metric.eval(mixture, reference)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitResult {
    pub mean: Db,
    /// `permutation[i]` is the reference matched to estimate `i`.
    pub permutation: Vec<usize>,
}

/// Best mean score over all assignments of estimates to references.
///
/// Ties go to the lexicographically smallest permutation.
pub fn pit_score<E, R>(estimates: &[E], references: &[R], metric: Metric) -> Result<PitResult>
where
    E: AsRef<[f64]>,
    R: AsRef<[f64]>,
{
    let n = estimates.len();
    if n != references.len() {
        return Err(Error::invalid(format!(
            "{n} estimates but {} references",
            references.len()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one source"));
    }
    if n > MAX_PIT_SOURCES {
        return Err(Error::UnsupportedSize(format!(
            "{n} sources; exhaustive search is limited to {MAX_PIT_SOURCES}"
        )));
    }
    let mut pairwise = vec![vec![Db::NegInf; n]; n];
    for (i, est) in estimates.iter().enumerate() {
        for (j, reference) in references.iter().enumerate() {
            pairwise[i][j] = metric.eval(est.as_ref(), reference.as_ref())?;
        }
    }
    let mut best: Option<(Ranking, Vec<usize>)> = None;
    for perm in (0..n).permutations(n) {
        let ranking = Ranking::of(perm.iter().enumerate().map(|(i, &j)| pairwise[i][j]));
        if best.as_ref().is_none_or(|(b, _)| ranking.beats(b)) {
            best = Some((ranking, perm));
        }
    }
    let (_, permutation) = best.expect("at least one permutation");
    let scores: Vec<Db> = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| pairwise[i][j])
        .collect();
    Ok(PitResult {
        mean: Db::mean(&scores),
        permutation,
    })
}

/// Orders assignments whose means may be infinite: fewer `-inf` terms first,
/// then more `+inf` terms, then the larger finite sum.
struct Ranking {
    neg: usize,
    pos: usize,
    finite: f64,
}

impl Ranking {
    fn of(scores: impl Iterator<Item = Db>) -> Self {
        let mut r = Ranking {
            neg: 0,
            pos: 0,
            finite: 0.0,
        };
        for s in scores {
            match s {
                Db::NegInf => r.neg += 1,
                Db::PosInf => r.pos += 1,
                Db::Finite(v) => r.finite += v,
            }
        }
        r
    }

    fn beats(&self, other: &Ranking) -> bool {
        other
            .neg
            .cmp(&self.neg)
            .then(self.pos.cmp(&other.pos))
            .then(self.finite.total_cmp(&other.finite))
            == Ordering::Greater
    }
}

/// PIT-aligned Si-SDR and SDR for a set of separated sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationScore {
    pub si_sdr_db: Db,
    pub sdr_db: Db,
    pub permutation: Vec<usize>,
}

/// Aligns sources by Si-SDR, then reports both metrics under that alignment.
pub fn separation_score<E, R>(estimates: &[E], references: &[R]) -> Result<SeparationScore>
where
    E: AsRef<[f64]>,
    R: AsRef<[f64]>,
{
    let pit = pit_score(estimates, references, Metric::SiSdr)?;
    let sdrs = pit
        .permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| sdr(estimates[i].as_ref(), references[j].as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparationScore {
        si_sdr_db: pit.mean,
        sdr_db: Db::mean(&sdrs),
        permutation: pit.permutation,
    })
}

/// Mel cepstral distortion between two frame-aligned cepstrum sequences.
///
/// Mean over frames of `(10/ln 10)·√(2·Σ_i (c_i − c'_i)²)`; coefficient 0 is
/// skipped when `exclude_c0` is set.
pub fn mcd(a: &FeatureMatrix, b: &FeatureMatrix, exclude_c0: bool) -> Result<f64> {
    if a.coeffs() != b.coeffs() {
        return Err(Error::invalid(format!(
            "coefficient counts differ: {} vs {}",
            a.coeffs(),
            b.coeffs()
        )));
    }
    if a.frames() != b.frames() {
        return Err(Error::invalid(format!(
            "frame counts differ ({} vs {}); align the sequences first",
            a.frames(),
            b.frames()
        )));
    }
    let first = usize::from(exclude_c0);
    if a.frames() == 0 || a.coeffs() <= first {
        return Err(Error::invalid("mcd needs at least one frame and one coefficient"));
    }
    let k = 10.0 / std::f64::consts::LN_10;
    let total: f64 = a
        .data
        .columns()
        .into_iter()
        .zip(b.data.columns())
        .map(|(ca, cb)| {
            let sq: f64 = ca
                .iter()
                .zip(cb.iter())
                .skip(first)
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            k * (2.0 * sq).sqrt()
        })
        .sum();
    Ok(total / a.frames() as f64)
}
