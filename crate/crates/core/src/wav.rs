//! RIFF/WAVE reading and writing.
//!
//! Supports 16- and 32-bit integer PCM (format tag 1) and 32-bit IEEE float
//! (format tag 3). `WAVE_FORMAT_EXTENSIBLE` files carrying one of those
//! subformats are accepted on read. Integer samples are normalised by
//! `2^(bits-1)`, so full-scale negative maps to exactly `-1.0`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::{AudioBuffer, Error, Result};

const TAG_PCM: u16 = 1;
const TAG_FLOAT: u16 = 3;
const TAG_EXTENSIBLE: u16 = 0xFFFE;
/// Trailing 14 bytes shared by the standard KSDATAFORMAT subtype GUIDs.
const GUID_SUFFIX: [u8; 14] = [
    0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71,
];

const PCM16_SCALE: f64 = 32768.0;
const PCM32_SCALE: f64 = 2147483648.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Pcm16,
    Pcm32,
    Float32,
}

impl Encoding {
    pub fn bytes_per_sample(self) -> usize {
        match self {
            Encoding::Pcm16 => 2,
            Encoding::Pcm32 | Encoding::Float32 => 4,
        }
    }

    fn format_tag(self) -> u16 {
        match self {
            Encoding::Pcm16 | Encoding::Pcm32 => TAG_PCM,
            Encoding::Float32 => TAG_FLOAT,
        }
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm16" => Ok(Encoding::Pcm16),
            "pcm32" => Ok(Encoding::Pcm32),
            "float32" => Ok(Encoding::Float32),
            other => Err(Error::invalid(format!(
                "unknown encoding `{other}` (expected pcm16, pcm32 or float32)"
            ))),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Pcm16 => "pcm16",
            Encoding::Pcm32 => "pcm32",
            Encoding::Float32 => "float32",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavFormat {
    pub encoding: Encoding,
    pub sample_rate: u32,
    pub channels: u16,
}

impl WavFormat {
    pub fn new(encoding: Encoding, sample_rate: u32, channels: u16) -> Result<Self> {
        let format = Self {
            encoding,
            sample_rate,
            channels,
        };
        format.validate()?;
        Ok(format)
    }

    /// Format matching `buffer`'s rate and channel count.
    pub fn for_buffer(buffer: &AudioBuffer, encoding: Encoding) -> Result<Self> {
        let channels = u16::try_from(buffer.channels())
            .map_err(|_| Error::invalid("too many channels for a WAV file"))?;
        Self::new(encoding, buffer.sample_rate(), channels)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.channels) {
            return Err(Error::invalid(format!(
                "channel count {} outside [1, 64]",
                self.channels
            )));
        }
        if !(1..=768_000).contains(&self.sample_rate) {
            return Err(Error::invalid(format!(
                "sample rate {} outside [1, 768000]",
                self.sample_rate
            )));
        }
        Ok(())
    }

    pub fn block_align(&self) -> usize {
        self.channels as usize * self.encoding.bytes_per_sample()
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedContainer(msg.into())
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<WavFormat> {
    if body.len() < 16 {
        return Err(malformed(format!("fmt chunk is {} bytes, need 16", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12) as usize;
    let bits = u16_at(body, 14);

    if tag == TAG_EXTENSIBLE {
        if body.len() < 40 || u16_at(body, 16) < 22 {
            return Err(malformed("extensible fmt chunk too short"));
        }
        if body[26..40] != GUID_SUFFIX {
            return Err(Error::UnsupportedEncoding(
                "extensible subformat GUID is not a standard PCM/float GUID".into(),
            ));
        }
        tag = u16_at(body, 24);
    }
    let encoding = match (tag, bits) {
        (TAG_PCM, 16) => Encoding::Pcm16,
        (TAG_PCM, 32) => Encoding::Pcm32,
        (TAG_FLOAT, 32) => Encoding::Float32,
        (tag, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "format tag {tag} with {bits} bits per sample"
            )))
        }
    };
    let format = WavFormat {
        encoding,
        sample_rate,
        channels,
    };
    format
        .validate()
        .map_err(|e| malformed(format!("bad fmt fields: {e}")))?;
    if block_align != format.block_align() {
        return Err(malformed(format!(
            "block align {block_align} does not match {} channels of {encoding}",
            channels
        )));
    }
    Ok(format)
}

/// Decodes a complete RIFF/WAVE byte stream.
pub fn decode(bytes: &[u8]) -> Result<(AudioBuffer, WavFormat)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let riff_end = (u32_at(bytes, 4) as usize)
        .saturating_add(8)
        .min(bytes.len());

    let mut format = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= riff_end {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = riff_end - body_start;
        if size > available {
            if id == b"data" {
                return Err(Error::TruncatedPayload {
                    expected: size,
                    found: available,
                });
            }
            return Err(malformed(format!(
                "chunk `{}` declares {size} bytes but only {available} remain",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " if format.is_none() => format = Some(parse_fmt(body)?),
            b"data" if data.is_none() => data = Some(body),
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }

    let format = format.ok_or_else(|| malformed("missing fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("missing data chunk"))?;
    let channels = format.channels as usize;
    let width = format.encoding.bytes_per_sample();
    let frames = data.len() / format.block_align();

    let mut samples = Array2::<f64>::zeros((channels, frames));
    for (i, raw) in data.chunks_exact(width).take(frames * channels).enumerate() {
        let value = match format.encoding {
            Encoding::Pcm16 => i16::from_le_bytes([raw[0], raw[1]]) as f64 / PCM16_SCALE,
            Encoding::Pcm32 => {
                i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64 / PCM32_SCALE
            }
            Encoding::Float32 => {
                let v = f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64;
                if !v.is_finite() {
                    return Err(malformed(format!("non-finite float sample at index {i}")));
                }
                v
            }
        };
        samples[[i % channels, i / channels]] = value;
    }
    let buffer = AudioBuffer::new(samples, format.sample_rate)?;
    Ok((buffer, format))
}

pub fn read_wav<R: Read>(mut reader: R) -> Result<(AudioBuffer, WavFormat)> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<(AudioBuffer, WavFormat)> {
    read_wav(File::open(path)?)
}

fn quantize(x: f64, scale: f64, max: f64) -> f64 {
    // f64::round rounds half away from zero
    (x.clamp(-1.0, 1.0) * scale).round().clamp(-scale, max)
}

/// Encodes `buffer` as a complete WAV file.
pub fn encode(buffer: &AudioBuffer, format: &WavFormat) -> Result<Vec<u8>> {
    format.validate()?;
    if buffer.channels() != format.channels as usize {
        return Err(Error::invalid(format!(
            "buffer has {} channels, format declares {}",
            buffer.channels(),
            format.channels
        )));
    }
    if buffer.sample_rate() != format.sample_rate {
        return Err(Error::invalid(format!(
            "buffer is at {} Hz, format declares {} Hz",
            buffer.sample_rate(),
            format.sample_rate
        )));
    }
    let data_len = buffer.frames() * format.block_align();
    let fmt_len: usize = match format.encoding {
        Encoding::Float32 => 18,
        _ => 16,
    };
    let pad = data_len & 1;
    let riff_len = 4 + (8 + fmt_len) + (8 + data_len + pad);
    let riff_len_u32 = u32::try_from(riff_len)
        .map_err(|_| Error::invalid("audio too long for a RIFF container"))?;

    let mut out = Vec::with_capacity(riff_len + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len_u32.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&(fmt_len as u32).to_le_bytes());
    out.extend_from_slice(&format.encoding.format_tag().to_le_bytes());
    out.extend_from_slice(&format.channels.to_le_bytes());
    out.extend_from_slice(&format.sample_rate.to_le_bytes());
    let byte_rate = format.sample_rate * format.block_align() as u32;
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(format.block_align() as u16).to_le_bytes());
    out.extend_from_slice(&((format.encoding.bytes_per_sample() * 8) as u16).to_le_bytes());
    if fmt_len == 18 {
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let samples = buffer.samples();
    for t in 0..buffer.frames() {
        for c in 0..buffer.channels() {
            let x = samples[[c, t]];
            match format.encoding {
                Encoding::Pcm16 => {
                    let q = quantize(x, PCM16_SCALE, i16::MAX as f64) as i16;
                    out.extend_from_slice(&q.to_le_bytes());
                }
                Encoding::Pcm32 => {
                    let q = quantize(x, PCM32_SCALE, i32::MAX as f64) as i32;
                    out.extend_from_slice(&q.to_le_bytes());
                }
                Encoding::Float32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
            }
        }
    }
    if pad == 1 {
        out.push(0);
    }
    Ok(out)
}

/// Writes `buffer` to `writer`, returning the number of bytes written.
pub fn write_wav<W: Write>(buffer: &AudioBuffer, format: &WavFormat, mut writer: W) -> Result<usize> {
    let bytes = encode(buffer, format)?;
    writer.write_all(&bytes)?;
    writer.flush()?;
    Ok(bytes.len())
}

pub fn write_wav_file(
    buffer: &AudioBuffer,
    format: &WavFormat,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let bytes = encode(buffer, format)?;
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(bytes.len())
}
