//! Sequential effects chains in the style of command-line audio tools.
//!
//! A chain is parsed from a flat token list such as
//! `["gain", "-3", "tempo", "1.25"]`: every registered effect name consumes
//! its declared number of numeric arguments.
//!
//! | effect  | args            | semantics                                          |
//! |---------|-----------------|----------------------------------------------------|
//! | `gain`  | dB              | multiply by `10^(dB/20)`                           |
//! | `trim`  | start_s dur_s   | keep `[floor(start·sr), +floor(dur·sr))`, clamped  |
//! | `fade`  | in_s out_s      | linear fade-in and fade-out ramps                  |
//! | `rate`  | Hz              | resample to a new rate                             |
//! | `speed` | factor          | change playback speed; pitch and duration change   |
//! | `tempo` | factor          | phase-vocoder stretch, duration / factor           |
//! | `pitch` | cents           | shift pitch, duration preserved                    |

use crate::dsp::{istft, stft, StftConfig};
use crate::filter::{resample, resample_signal, ResampleSpec};
use crate::phase::phase_vocoder;
use crate::{AudioBuffer, Error, Result};

const TEMPO_N_FFT: usize = 1024;
const TEMPO_HOP: usize = 256;

struct EffectSpec {
    name: &'static str,
    arity: usize,
    usage: &'static str,
    check: fn(&[f64]) -> std::result::Result<(), String>,
}

fn any(_: &[f64]) -> std::result::Result<(), String> {
    Ok(())
}

fn non_negative(args: &[f64]) -> std::result::Result<(), String> {
    match args.iter().find(|v| **v < 0.0) {
        Some(v) => Err(format!("expected a non-negative value, got {v}")),
        None => Ok(()),
    }
}

fn positive(args: &[f64]) -> std::result::Result<(), String> {
    match args.iter().find(|v| !(**v > 0.0)) {
        Some(v) => Err(format!("expected a positive value, got {v}")),
        None => Ok(()),
    }
}

fn sample_rate(args: &[f64]) -> std::result::Result<(), String> {
    let hz = args[0];
    if hz >= 1.0 && hz <= 768_000.0 && hz.fract() == 0.0 {
        Ok(())
    } else {
        Err(format!("expected an integer rate in [1, 768000] Hz, got {hz}"))
    }
}

static REGISTRY: &[EffectSpec] = &[
    EffectSpec { name: "gain", arity: 1, usage: "gain <dB>", check: any },
    EffectSpec { name: "trim", arity: 2, usage: "trim <start_s> <duration_s>", check: non_negative },
    EffectSpec { name: "fade", arity: 2, usage: "fade <in_s> <out_s>", check: non_negative },
    EffectSpec { name: "rate", arity: 1, usage: "rate <hz>", check: sample_rate },
    EffectSpec { name: "speed", arity: 1, usage: "speed <factor>", check: positive },
    EffectSpec { name: "tempo", arity: 1, usage: "tempo <factor>", check: positive },
    EffectSpec { name: "pitch", arity: 1, usage: "pitch <cents>", check: any },
];

fn lookup(name: &str) -> Option<&'static EffectSpec> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// Names of every registered effect.
pub fn registered_effects() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|e| e.name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectDescriptor {
    pub name: String,
    pub args: Vec<String>,
    values: Vec<f64>,
}

impl EffectDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EffectChain {
    pub effects: Vec<EffectDescriptor>,
}

impl EffectChain {
    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    /// `self` followed by `other`.
    pub fn then(mut self, other: EffectChain) -> Self {
        self.effects.extend(other.effects);
        self
    }
}

pub fn parse_chain<S: AsRef<str>>(tokens: &[S]) -> Result<EffectChain> {
    let mut effects = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let name = tokens[pos].as_ref();
        let spec = lookup(name).ok_or_else(|| Error::Parse {
            position: pos,
            message: format!(
                "unknown effect `{name}` (known: {})",
                registered_effects().collect::<Vec<_>>().join(", ")
            ),
        })?;
        let args = &tokens[pos + 1..];
        if args.len() < spec.arity {
            return Err(Error::Parse {
                position: pos,
                message: format!(
                    "{name} requires {} argument{}: {}",
                    spec.arity,
                    if spec.arity == 1 { "" } else { "s" },
                    spec.usage
                ),
            });
        }
        let mut values = Vec::with_capacity(spec.arity);
        for (i, raw) in args[..spec.arity].iter().enumerate() {
            let raw = raw.as_ref();
            let v = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    position: pos + 1 + i,
                    message: format!("{name}: `{raw}` is not a number ({})", spec.usage),
                })?;
            values.push(v);
        }
        (spec.check)(&values).map_err(|message| Error::Parse {
            position: pos + 1,
            message: format!("{name}: {message}"),
        })?;
        effects.push(EffectDescriptor {
            name: name.to_string(),
            args: args[..spec.arity].iter().map(|s| s.as_ref().to_string()).collect(),
            values,
        });
        pos += 1 + spec.arity;
    }
    Ok(EffectChain { effects })
}

/// Applies each effect left to right.
pub fn apply_chain(buffer: &AudioBuffer, chain: &EffectChain) -> Result<AudioBuffer> {
    chain
        .effects
        .iter()
        .try_fold(buffer.clone(), |buf, effect| apply_effect(&buf, effect))
}

fn apply_effect(buffer: &AudioBuffer, effect: &EffectDescriptor) -> Result<AudioBuffer> {
    let v = &effect.values;
    match effect.name.as_str() {
        "gain" => gain(buffer, v[0]),
        "trim" => trim(buffer, v[0], v[1]),
        "fade" => fade(buffer, v[0], v[1]),
        "rate" => resample(buffer, &ResampleSpec::new(buffer.sample_rate(), v[0] as u32)),
        "speed" => speed(buffer, v[0]),
        "tempo" => tempo(buffer, v[0]),
        "pitch" => pitch(buffer, v[0]),
        other => Err(Error::invalid(format!("unknown effect `{other}`"))),
    }
}

fn gain(buffer: &AudioBuffer, db: f64) -> Result<AudioBuffer> {
    if db == 0.0 {
        return Ok(buffer.clone());
    }
    let factor = 10f64.powf(db / 20.0);
    AudioBuffer::new(buffer.samples().mapv(|s| s * factor), buffer.sample_rate())
}

fn trim(buffer: &AudioBuffer, start_s: f64, dur_s: f64) -> Result<AudioBuffer> {
    let sr = buffer.sample_rate() as f64;
    let frames = buffer.frames();
    let start = ((start_s * sr).floor() as usize).min(frames);
    let end = start.saturating_add((dur_s * sr).floor() as usize).min(frames);
    let kept = buffer.samples().slice(ndarray::s![.., start..end]).to_owned();
    AudioBuffer::new(kept, buffer.sample_rate())
}

fn fade(buffer: &AudioBuffer, in_s: f64, out_s: f64) -> Result<AudioBuffer> {
    let sr = buffer.sample_rate() as f64;
    let frames = buffer.frames();
    let n_in = ((in_s * sr).floor() as usize).min(frames);
    let n_out = ((out_s * sr).floor() as usize).min(frames);
    let mut samples = buffer.samples().clone();
    for mut channel in samples.rows_mut() {
        for i in 0..n_in {
            channel[i] *= i as f64 / n_in as f64;
        }
        for j in 0..n_out {
            channel[frames - 1 - j] *= j as f64 / n_out as f64;
        }
    }
    AudioBuffer::new(samples, buffer.sample_rate())
}

/// Integer rate for a buffer at `sr` played `factor` times faster.
fn scaled_rate(sr: u32, factor: f64) -> Result<u32> {
    let scaled = (sr as f64 * factor).round();
    if !(scaled >= 1.0 && scaled <= u32::MAX as f64) {
        return Err(Error::invalid(format!(
            "factor {factor} moves {sr} Hz out of range"
        )));
    }
    Ok(scaled as u32)
}

fn speed(buffer: &AudioBuffer, factor: f64) -> Result<AudioBuffer> {
    let sr = buffer.sample_rate();
    let spec = ResampleSpec::new(scaled_rate(sr, factor)?, sr);
    buffer.map_channels(sr, |c| resample_signal(c, &spec))
}

fn stretch(signal: &[f64], sr: u32, factor: f64) -> Result<Vec<f64>> {
    let target = (signal.len() as f64 / factor).round() as usize;
    if signal.is_empty() || target == 0 {
        return Ok(vec![0.0; target]);
    }
    let cfg = StftConfig::new(TEMPO_N_FFT, TEMPO_HOP).with_power(None);
    let spec = stft(signal, &cfg, sr)?;
    let stretched = phase_vocoder(&spec, factor)?;
    istft(&stretched, Some(target))
}

fn tempo(buffer: &AudioBuffer, factor: f64) -> Result<AudioBuffer> {
    let sr = buffer.sample_rate();
    buffer.map_channels(sr, |c| stretch(c, sr, factor))
}

fn pitch(buffer: &AudioBuffer, cents: f64) -> Result<AudioBuffer> {
    let sr = buffer.sample_rate();
    let ratio = 2f64.powf(cents / 1200.0);
    let spec = ResampleSpec::new(scaled_rate(sr, ratio)?, sr);
    let frames = buffer.frames();
    buffer.map_channels(sr, |c| {
        // stretch to ratio × duration, then play back ratio × faster
        let long = stretch(c, sr, 1.0 / ratio)?;
        let mut out = resample_signal(&long, &spec)?;
        out.resize(frames, 0.0);
        Ok(out)
    })
}
