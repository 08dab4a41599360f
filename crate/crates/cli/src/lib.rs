//! Command-line front-end for `wavekit`.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 I/O or format error,
//! 4 numeric or domain error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use wavekit::bench::{self, BenchOp};
use wavekit::dsp::StftConfig;
use wavekit::effects::{apply_chain, parse_chain};
use wavekit::features::{self, FeatureMatrix, MelParams};
use wavekit::filter::{resample, ResampleSpec};
use wavekit::metrics::{self, Db, Metric};
use wavekit::ndarray::Array2;
use wavekit::wav::{self, Encoding, WavFormat};
use wavekit::AudioBuffer;

mod format;

pub use format::format_significant;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DOMAIN: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "wavekit", version, about = "Audio DSP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print sample rate, channels, encoding and duration of a WAV file
    Info { input: PathBuf },
    /// Re-encode and optionally resample a WAV file
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        encoding: Option<EncodingArg>,
        #[arg(long)]
        rate: Option<u32>,
    },
    /// Apply an effects chain, e.g. `fx in.wav out.wav gain -3 tempo 1.25`
    Fx {
        input: PathBuf,
        output: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
        chain: Vec<String>,
    },
    /// Compute a feature matrix and write it as CSV (rows = coefficients, columns = frames)
    Features {
        input: PathBuf,
        #[arg(long, value_enum)]
        op: FeatureOp,
        #[arg(long, default_value_t = 2048)]
        n_fft: usize,
        #[arg(long, default_value_t = 512)]
        hop: usize,
        #[arg(long, default_value_t = 128)]
        n_mels: usize,
        #[arg(long, default_value_t = 40)]
        n_mfcc: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the benchmark ops on seeded white noise and write a CSV report
    Bench {
        /// Comma-separated subset of spectrogram,mfcc,spectral_centroid,griffin_lim,phase_vocoder
        #[arg(long)]
        ops: Option<String>,
        #[arg(long, default_value_t = bench::DEFAULT_TRIALS)]
        trials: usize,
        /// Override the per-op repetitions per trial (defaults: 100 or 10)
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 22050)]
        rate: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluation metrics
    #[command(subcommand)]
    Metrics(MetricsCommand),
}

#[derive(Debug, Subcommand)]
enum MetricsCommand {
    /// PIT Si-SDR of estimate channels against reference channels
    SiSdr { estimate: PathBuf, reference: PathBuf },
    /// Si-SDR and SDR improvement of the estimates over the mixture
    Sdri {
        estimate: PathBuf,
        reference: PathBuf,
        mixture: PathBuf,
    },
    /// Mel cepstral distortion between two MFCC CSV files (or WAV files, converted with default MFCC settings)
    Mcd {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        exclude_c0: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncodingArg {
    Pcm16,
    Pcm32,
    Float32,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Pcm16 => Encoding::Pcm16,
            EncodingArg::Pcm32 => Encoding::Pcm32,
            EncodingArg::Float32 => Encoding::Float32,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeatureOp {
    Mfcc,
    Melspec,
    Centroid,
    Spectrogram,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn exit_code(err: &wavekit::Error) -> u8 {
    use wavekit::Error::*;
    match err {
        Parse { .. } => EXIT_USAGE,
        Io(_) | MalformedContainer(_) | TruncatedPayload { .. } | UnsupportedEncoding(_) | Csv(_) => {
            EXIT_IO
        }
        InvalidArgument(_) | NonInvertible(_) | DegenerateFilterbank(_) | UnsupportedSize(_) => {
            EXIT_DOMAIN
        }
    }
}

impl From<wavekit::Error> for Failure {
    fn from(err: wavekit::Error) -> Self {
        Failure::new(exit_code(&err), err.to_string())
    }
}

/// Attaches a path to I/O and format errors.
trait Context<T> {
    fn at(self, path: &Path) -> Result<T, Failure>;
}

impl<T> Context<T> for wavekit::Result<T> {
    fn at(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(exit_code(&e), format!("{}: {e}", path.display())))
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T, O, E>(args: I, out: &mut O, err: &mut E) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch<O: Write>(command: Command, out: &mut O) -> Result<(), Failure> {
    match command {
        Command::Info { input } => info(&input, out),
        Command::Convert {
            input,
            output,
            encoding,
            rate,
        } => convert(&input, &output, encoding.map(Encoding::from), rate),
        Command::Fx {
            input,
            output,
            chain,
        } => fx(&input, &output, &chain),
        Command::Features {
            input,
            op,
            n_fft,
            hop,
            n_mels,
            n_mfcc,
            out: path,
        } => {
            let cfg = StftConfig::new(n_fft, hop);
            feature_csv(&input, op, &cfg, n_mels, n_mfcc, &path)
        }
        Command::Bench {
            ops,
            trials,
            reps,
            out: path,
            duration_s,
            rate,
            seed,
        } => run_bench(ops.as_deref(), trials, reps, path.as_deref(), duration_s, rate, seed, out),
        Command::Metrics(m) => run_metrics(m, out),
    }
}

fn read(path: &Path) -> Result<(AudioBuffer, WavFormat), Failure> {
    wav::read_wav_file(path).at(path)
}

fn write(buffer: &AudioBuffer, encoding: Encoding, path: &Path) -> Result<(), Failure> {
    let format = WavFormat::for_buffer(buffer, encoding)?;
    wav::write_wav_file(buffer, &format, path).at(path)?;
    Ok(())
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, e.to_string())
}

fn info<O: Write>(input: &Path, out: &mut O) -> Result<(), Failure> {
    let (buffer, format) = read(input)?;
    writeln!(out, "sample_rate: {}", format.sample_rate).map_err(io_fail)?;
    writeln!(out, "channels: {}", format.channels).map_err(io_fail)?;
    writeln!(out, "encoding: {}", format.encoding).map_err(io_fail)?;
    writeln!(out, "frames: {}", buffer.frames()).map_err(io_fail)?;
    writeln!(out, "duration_s: {:.6}", buffer.duration_secs()).map_err(io_fail)?;
    Ok(())
}

fn convert(input: &Path, output: &Path, encoding: Option<Encoding>, rate: Option<u32>) -> Result<(), Failure> {
    let (buffer, format) = read(input)?;
    let buffer = match rate {
        Some(r) => resample(&buffer, &ResampleSpec::new(buffer.sample_rate(), r))?,
        None => buffer,
    };
    write(&buffer, encoding.unwrap_or(format.encoding), output)
}

fn fx(input: &Path, output: &Path, tokens: &[String]) -> Result<(), Failure> {
    // parse before touching any file
    let chain = parse_chain(tokens)?;
    let (buffer, format) = read(input)?;
    let processed = apply_chain(&buffer, &chain)?;
    write(&processed, format.encoding, output)
}

fn compute_features(
    buffer: &AudioBuffer,
    op: FeatureOp,
    cfg: &StftConfig,
    n_mels: usize,
    n_mfcc: usize,
) -> Result<FeatureMatrix, Failure> {
    let signal = buffer.channel(0).to_vec();
    let sr = buffer.sample_rate();
    let mel = MelParams::new(n_mels);
    Ok(match op {
        FeatureOp::Mfcc => features::mfcc(&signal, sr, cfg, &mel, n_mfcc, 1e-10)?,
        FeatureOp::Melspec => features::mel_spectrogram(&signal, sr, cfg, &mel)?,
        FeatureOp::Spectrogram => features::power_spectrogram(&signal, sr, cfg)?,
        FeatureOp::Centroid => {
            let c = features::spectral_centroid(&signal, sr, cfg)?;
            let frames = c.len();
            let data = Array2::from_shape_vec((1, frames), c).map_err(|e| Failure::new(EXIT_DOMAIN, e.to_string()))?;
            FeatureMatrix::new(data, sr as f64 / cfg.hop_length as f64)?
        }
    })
}

fn feature_csv(
    input: &Path,
    op: FeatureOp,
    cfg: &StftConfig,
    n_mels: usize,
    n_mfcc: usize,
    path: &Path,
) -> Result<(), Failure> {
    let (buffer, _) = read(input)?;
    if buffer.frames() == 0 {
        return Err(Failure::new(EXIT_DOMAIN, format!("{}: no audio frames", input.display())));
    }
    let features = compute_features(&buffer, op, cfg, n_mels, n_mfcc)?;
    let file = File::create(path).at(path)?;
    format::write_matrix(&features.data, BufWriter::new(file)).at(path)
}

#[allow(clippy::too_many_arguments)]
fn run_bench<O: Write>(
    ops: Option<&str>,
    trials: usize,
    reps: Option<usize>,
    path: Option<&Path>,
    duration_s: f64,
    rate: u32,
    seed: u64,
    out: &mut O,
) -> Result<(), Failure> {
    let ops = match ops {
        Some(list) => BenchOp::parse_list(list).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
        None => BenchOp::ALL.to_vec(),
    };
    if ops.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "--ops names no operations"));
    }
    if trials == 0 {
        return Err(Failure::new(EXIT_USAGE, "--trials must be at least 1"));
    }
    if rate == 0 || !(duration_s > 0.0) {
        return Err(Failure::new(EXIT_DOMAIN, "--rate and --duration-s must be positive"));
    }
    let reps = ops
        .iter()
        .map(|&op| (op, reps.unwrap_or_else(|| op.default_reps())))
        .collect();
    let input = bench::white_noise(duration_s, rate, seed)?;
    let reports = bench::bench_run(&ops, trials, &reps, &input)?;
    match path {
        Some(p) => {
            let file = File::create(p).at(p)?;
            bench::write_csv(&reports, BufWriter::new(file)).at(p)
        }
        None => bench::write_csv(&reports, out).map_err(Failure::from),
    }
}

fn sources(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    Ok(read(path)?.0.channel_vecs())
}

fn fmt_db(v: Db) -> String {
    match v {
        Db::Finite(x) => format!("{x:.6}"),
        other => other.to_string(),
    }
}

fn run_metrics<O: Write>(cmd: MetricsCommand, out: &mut O) -> Result<(), Failure> {
    match cmd {
        MetricsCommand::SiSdr {
            estimate,
            reference,
        } => {
            let score = metrics::separation_score(&sources(&estimate)?, &sources(&reference)?)?;
            writeln!(out, "si_sdr_db: {}", fmt_db(score.si_sdr_db)).map_err(io_fail)?;
            writeln!(out, "sdr_db: {}", fmt_db(score.sdr_db)).map_err(io_fail)?;
            writeln!(out, "permutation: {}", join(&score.permutation)).map_err(io_fail)?;
        }
        MetricsCommand::Sdri {
            estimate,
            reference,
            mixture,
        } => {
            let est = sources(&estimate)?;
            let refs = sources(&reference)?;
            let mix = sources(&mixture)?.swap_remove(0);
            let pit = metrics::pit_score(&est, &refs, Metric::SiSdr)?;
            let mut si = Vec::new();
            let mut plain = Vec::new();
            for (i, &j) in pit.permutation.iter().enumerate() {
                si.push(metrics::improvement(&est[i], &refs[j], &mix, Metric::SiSdr)?);
                plain.push(metrics::improvement(&est[i], &refs[j], &mix, Metric::Sdr)?);
            }
            writeln!(out, "si_sdri_db: {}", fmt_db(Db::mean(&si))).map_err(io_fail)?;
            writeln!(out, "sdri_db: {}", fmt_db(Db::mean(&plain))).map_err(io_fail)?;
            writeln!(out, "permutation: {}", join(&pit.permutation)).map_err(io_fail)?;
        }
        MetricsCommand::Mcd { a, b, exclude_c0 } => {
            let value = metrics::mcd(&cepstra(&a)?, &cepstra(&b)?, exclude_c0)?;
            writeln!(out, "mcd: {value:.6}").map_err(io_fail)?;
        }
    }
    Ok(())
}

fn join(perm: &[usize]) -> String {
    perm.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn cepstra(path: &Path) -> Result<FeatureMatrix, Failure> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let file = File::open(path).at(path)?;
        let data = format::read_matrix(file).at(path)?;
        return FeatureMatrix::new(data, 0.0).at(path);
    }
    let (buffer, _) = read(path)?;
    compute_features(&buffer, FeatureOp::Mfcc, &StftConfig::new(2048, 512), 128, 40)
}
