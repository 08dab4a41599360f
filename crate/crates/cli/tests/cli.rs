use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use wavekit::wav::{read_wav_file, write_wav_file, Encoding, WavFormat};
use wavekit::AudioBuffer;

fn wavekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavekit"))
        .args(args)
        .output()
        .expect("spawn wavekit")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn wav(&self, name: &str, channels: Vec<Vec<f64>>, sr: u32, enc: Encoding) -> String {
        let buf = AudioBuffer::from_channels(channels, sr).unwrap();
        write_wav_file(&buf, &WavFormat::for_buffer(&buf, enc).unwrap(), self.path(name)).unwrap();
        self.arg(name)
    }
}

fn tone(freq: f64, sr: u32, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.4 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
        .collect()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn info_reports_format() {
    let fx = Fixture::new();
    let input = fx.wav("a.wav", vec![tone(440.0, 8000, 4000); 2], 8000, Encoding::Pcm16);
    let out = wavekit(&["info", &input]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in ["sample_rate: 8000", "channels: 2", "encoding: pcm16", "frames: 4000", "duration_s: 0.500000"] {
        assert!(text.contains(line), "{text}");
    }
}

#[test]
fn convert_changes_encoding_and_rate() {
    let fx = Fixture::new();
    let input = fx.wav("a.wav", vec![tone(440.0, 48000, 48000)], 48000, Encoding::Pcm16);
    let out = wavekit(&["convert", &input, &fx.arg("b.wav"), "--encoding", "float32", "--rate", "16000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (buf, fmt) = read_wav_file(fx.path("b.wav")).unwrap();
    assert_eq!(fmt.encoding, Encoding::Float32);
    assert_eq!(buf.sample_rate(), 16000);
    assert_eq!(buf.frames(), 16000);
}

#[test]
fn fx_chain_is_applied_in_order() {
    let fx = Fixture::new();
    let input = fx.wav("a.wav", vec![tone(440.0, 16000, 16000)], 16000, Encoding::Float32);
    let out = wavekit(&["fx", &input, &fx.arg("b.wav"), "gain", "-6", "trim", "0.25", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let (buf, _) = read_wav_file(fx.path("b.wav")).unwrap();
    assert_eq!(buf.frames(), 8000);
    let peak = buf.channel(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 0.4 * 10f64.powf(-0.3)).abs() < 1e-3, "{peak}");
}

#[test]
fn fx_parse_errors_leave_no_output() {
    let fx = Fixture::new();
    let input = fx.wav("a.wav", vec![tone(440.0, 16000, 1600)], 16000, Encoding::Pcm16);
    let out = wavekit(&["fx", &input, &fx.arg("b.wav"), "gain", "0", "tempo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!fx.path("b.wav").exists());
}

#[test]
fn features_csv_shapes() {
    let fx = Fixture::new();
    let input = fx.wav("a.wav", vec![tone(1000.0, 16000, 16000)], 16000, Encoding::Float32);
    let frames = 1 + 16000 / 256;
    for (op, rows) in [("mfcc", 13), ("melspec", 40), ("spectrogram", 513), ("centroid", 1)] {
        let csv = fx.arg(&format!("{op}.csv"));
        let out = wavekit(&[
            "features", &input, "--op", op, "--n-fft", "1024", "--hop", "256", "--n-mels", "40", "--n-mfcc", "13",
            "--out", &csv,
        ]);
        assert_eq!(out.status.code(), Some(0), "{op}: {}", String::from_utf8_lossy(&out.stderr));
        let (header, data) = read_csv(Path::new(&csv));
        assert_eq!(header.len(), frames);
        assert_eq!(header[0], "t0");
        assert_eq!(data.len(), rows, "{op}");
        assert!(data.iter().all(|r| r.len() == frames));
    }
    let (_, centroid) = read_csv(&fx.path("centroid.csv"));
    // interior frames sit on the tone
    assert!((centroid[0][frames / 2] - 1000.0).abs() < 20.0);
}

#[test]
fn bench_writes_csv_to_stdout() {
    let out = wavekit(&["bench", "--ops", "spectrogram,centroid", "--trials", "1", "--reps", "1", "--duration-s", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "op,reps,trials,mean_s,stderr_s,input");
    assert!(lines[1].starts_with("spectrogram,1,1,"));
    assert!(lines[2].starts_with("spectral_centroid,1,1,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn bench_rejects_unknown_op() {
    let out = wavekit(&["bench", "--ops", "fft", "--duration-s", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_si_sdr_finds_permutation() {
    let fx = Fixture::new();
    let a = tone(300.0, 8000, 4000);
    let b = tone(1100.0, 8000, 4000);
    let refs = fx.wav("ref.wav", vec![a.clone(), b.clone()], 8000, Encoding::Float32);
    let est = fx.wav("est.wav", vec![b, a], 8000, Encoding::Float32);
    let out = wavekit(&["metrics", "si-sdr", &est, &refs]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("si_sdr_db: inf"), "{text}");
    assert!(text.contains("permutation: 1,0"), "{text}");
}

#[test]
fn metrics_sdri_of_mixture_is_zero() {
    let fx = Fixture::new();
    let a = tone(300.0, 8000, 4000);
    let b = tone(1100.0, 8000, 4000);
    let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let refs = fx.wav("ref.wav", vec![a], 8000, Encoding::Float32);
    let m = fx.wav("mix.wav", vec![mix], 8000, Encoding::Float32);
    let out = wavekit(&["metrics", "sdri", &m, &refs, &m]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("si_sdri_db: 0.000000"), "{text}");
    assert!(text.contains("sdri_db: 0.000000"), "{text}");
}

#[test]
fn metrics_mcd_from_csv() {
    let fx = Fixture::new();
    fs::write(fx.path("a.csv"), "t0\n0\n").unwrap();
    fs::write(fx.path("b.csv"), "t0\n1\n").unwrap();
    let out = wavekit(&["metrics", "mcd", &fx.arg("a.csv"), &fx.arg("b.csv")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "mcd: 6.141851\n");
}

#[test]
fn metrics_length_mismatch_is_domain_error() {
    let fx = Fixture::new();
    let a = fx.wav("a.wav", vec![tone(300.0, 8000, 4000)], 8000, Encoding::Float32);
    let b = fx.wav("b.wav", vec![tone(300.0, 8000, 3000)], 8000, Encoding::Float32);
    let out = wavekit(&["metrics", "si-sdr", &a, &b]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn random_bytes_never_crash_info_or_convert() {
    let fx = Fixture::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..60 {
        let mut bytes: Vec<u8> = (0..rng.random_range(0..2048)).map(|_| rng.random()).collect();
        if i % 2 == 1 {
            bytes.splice(0..0, b"RIFF\x10\0\0\0WAVEfmt ".iter().copied());
        }
        fs::write(fx.path("junk.wav"), &bytes).unwrap();
        let info = wavekit(&["info", &fx.arg("junk.wav")]);
        let convert = wavekit(&["convert", &fx.arg("junk.wav"), &fx.arg("out.wav")]);
        assert_eq!(info.status.code(), Some(3));
        assert_eq!(convert.status.code(), Some(3));
        assert!(!info.stderr.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(wavekit(&["--help"]).status.code(), Some(0));
    assert_eq!(wavekit(&["--version"]).status.code(), Some(0));
    assert_eq!(wavekit(&[]).status.code(), Some(2));
}

#[test]
fn in_process_entry_point_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = wavekit_cli::run(["wavekit", "info", "/nonexistent/x.wav"], &mut out, &mut err);
    assert_eq!(code, 3);
    assert!(String::from_utf8(err).unwrap().contains("/nonexistent/x.wav"));
}
