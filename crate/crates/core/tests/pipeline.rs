use std::collections::HashMap;
use std::f64::consts::PI;

use wavekit::bench::{bench_run, white_noise, BenchOp};
use wavekit::dsp::{istft, stft, StftConfig};
use wavekit::effects::{apply_chain, parse_chain};
use wavekit::features::{mel_spectrogram, mfcc, MelParams};
use wavekit::filter::{design_bandpass, resample, ResampleSpec};
use wavekit::metrics::{si_sdr, Db};
use wavekit::phase::{griffin_lim, phase_vocoder, GriffinLimConfig};
use wavekit::wav::{decode, encode, Encoding, WavFormat};
use wavekit::AudioBuffer;

fn tone(freq: f64, sr: u32, frames: usize) -> Vec<f64> {
    (0..frames)
        .map(|n| 0.5 * (2.0 * PI * freq * n as f64 / sr as f64).sin())
        .collect()
}

#[test]
fn wav_to_features_and_back() {
    let sr = 16000;
    let buf = AudioBuffer::from_channels(vec![tone(440.0, sr, 8000), tone(660.0, sr, 8000)], sr).unwrap();
    let bytes = encode(&buf, &WavFormat::for_buffer(&buf, Encoding::Float32).unwrap()).unwrap();
    let (decoded, fmt) = decode(&bytes).unwrap();
    assert_eq!(fmt.channels, 2);

    let cfg = StftConfig::new(512, 128);
    let left = decoded.channel(0).to_vec();
    let melspec = mel_spectrogram(&left, sr, &cfg, &MelParams::new(40)).unwrap();
    let cepstra = mfcc(&left, sr, &cfg, &MelParams::new(40), 13, 1e-10).unwrap();
    assert_eq!(melspec.frames(), cepstra.frames());
    assert_eq!(cepstra.coeffs(), 13);

    let spec = stft(&left, &cfg, sr).unwrap();
    let back = istft(&spec, Some(left.len())).unwrap();
    assert_eq!(si_sdr(&back, &left).unwrap(), Db::PosInf);
}

#[test]
fn resample_round_trip_is_close() {
    let sr = 48000;
    let x = tone(1000.0, sr, 48000);
    let buf = AudioBuffer::from_mono(x.clone(), sr).unwrap();
    let down = resample(&buf, &ResampleSpec::new(48000, 22050)).unwrap();
    let up = resample(&down, &ResampleSpec::new(22050, 48000)).unwrap();
    assert_eq!(up.frames(), buf.frames());
    let err = x
        .iter()
        .zip(up.channel(0))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    assert!(err.sqrt() < 0.01, "rms {}", err.sqrt());
}

#[test]
fn bandpass_isolates_its_band() {
    let sr = 16000;
    let coeffs = design_bandpass(1000.0, sr as f64, 8.0).unwrap();
    let mix: Vec<f64> = tone(1000.0, sr, 16000)
        .iter()
        .zip(tone(4000.0, sr, 16000))
        .map(|(a, b)| a + b)
        .collect();
    let y = coeffs.apply(&mix).unwrap();
    let target = tone(1000.0, sr, 16000);
    // after the transient the output tracks the in-band tone
    let score = si_sdr(&y[4000..], &target[4000..]).unwrap().value();
    assert!(score > 20.0, "{score}");
}

#[test]
fn griffin_lim_on_stretched_speechlike_signal() {
    let sr = 8000;
    let x: Vec<f64> = tone(300.0, sr, 6000)
        .iter()
        .zip(tone(1700.0, sr, 6000))
        .enumerate()
        .map(|(n, (a, b))| (a + 0.3 * b) * (1.0 + (n as f64 / 900.0).sin()) / 2.0)
        .collect();
    let cfg = StftConfig::new(256, 64).with_power(None);
    let spec = stft(&x, &cfg, sr).unwrap();
    let stretched = phase_vocoder(&spec, 0.8).unwrap();
    let mag = stretched.data.mapv(|z| z.norm());
    let out = griffin_lim(&mag, &GriffinLimConfig::new(cfg.clone()).with_iterations(16), sr).unwrap();
    assert_eq!(out.frames(), cfg.natural_length(stretched.frames()));
    assert!(out.channel(0).iter().all(|v| v.is_finite()));
}

#[test]
fn effects_keep_buffer_invariants() {
    let sr = 22050;
    let buf = AudioBuffer::from_mono(tone(523.0, sr, 22050), sr).unwrap();
    let chain = parse_chain(&[
        "gain", "-1", "fade", "0.05", "0.05", "pitch", "-300", "tempo", "0.8", "speed", "1.1",
        "rate", "16000", "trim", "0.1", "0.5",
    ])
    .unwrap();
    let out = apply_chain(&buf, &chain).unwrap();
    assert_eq!(out.sample_rate(), 16000);
    assert_eq!(out.frames(), 8000);
    assert!(out.samples().iter().all(|v| v.is_finite()));
}

#[test]
fn longer_inputs_take_longer() {
    let reps = HashMap::from([(BenchOp::Spectrogram, 3)]);
    let short = white_noise(1.0, 22050, 1).unwrap();
    let long = white_noise(10.0, 22050, 1).unwrap();
    let a = bench_run(&[BenchOp::Spectrogram], 3, &reps, &short).unwrap();
    let b = bench_run(&[BenchOp::Spectrogram], 3, &reps, &long).unwrap();
    assert!(a[0].mean_seconds > 0.0);
    assert!(b[0].mean_seconds >= a[0].mean_seconds);
}
