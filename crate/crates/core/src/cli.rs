//! Command-line front end.
//!
//! Parameters resolve in the order: command-line flag, `--config` file
//! (flat `key = value` lines, `#` comments), built-in default.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error, 3 invalid
//! parameter, 4 I/O or file-format error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::corpus::load_corpus;
use crate::dcwt::{FilterBankSpec, WaveletFrame};
use crate::error::{invalid, Error, Result};
use crate::fglim::FglimConfig;
use crate::gridio::{load_grid, save_grid};
use crate::kernels::{CauchyParams, Wavelet};
use crate::metrics::{mean_std, write_reports, Method, ReconstructionReport};
use crate::phase::{MagnitudeGrid, DEFAULT_TOL};
use crate::reconstruct::{reconstruct, PipelineConfig};
use crate::verify::{self, linspace, Convention, DenseAnalyzer, Gabor, RefinementPlan, TwoPeak, VerifyRow};
use crate::wav::{read_wav, write_wav, WavFormat};

#[derive(Debug, Parser)]
#[command(name = "wavephase", version, about = "Wavelet transform phase retrieval toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a WAV file and save the coefficient grid.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Synthesize a signal from a coefficient grid.
    Synth {
        grid: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Reconstruct a signal from the magnitude of a grid (or of a WAV file).
    Reconstruct {
        input: PathBuf,
        #[arg(long, default_value = "wpghi", value_parser = Method::from_str)]
        method: Method,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run every method on every WAV file of a directory.
    Evaluate {
        corpus: PathBuf,
        /// Parameter tuple alpha,a_d,K; may be repeated.
        #[arg(long = "tuple")]
        tuples: Vec<String>,
        /// Named tuple set: `methods` or `redundancy`.
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated methods (default: all).
        #[arg(long)]
        methods: Option<String>,
        /// Truncate every signal to this many seconds.
        #[arg(long)]
        seconds: Option<f64>,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Numerical checks of the transform identities under grid refinement.
    Verify {
        /// One of wt, cr, laplacian, reassign, ridge, gabor.
        #[arg(value_parser = VerifyCheck::from_str)]
        check: VerifyCheck,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Reassign a WAV file on a time-frequency lattice and write CSV.
    Reassign {
        input: PathBuf,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 64)]
        nt: usize,
        #[arg(long, default_value_t = 48)]
        nf: usize,
        #[command(flatten)]
        opts: RunOptions,
    },
}

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct RunOptions {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "gamma-re")]
    pub gamma_re: Option<f64>,
    #[arg(long = "gamma-im")]
    pub gamma_im: Option<f64>,
    /// Number of wavelet channels K.
    #[arg(long, short = 'K')]
    pub channels: Option<usize>,
    /// Channels per octave B (with --min-scale or --fmax instead of --fmin).
    #[arg(long = "bins-per-octave", short = 'B')]
    pub bins_per_octave: Option<f64>,
    /// Minimum scale y_m in seconds.
    #[arg(long = "min-scale")]
    pub min_scale: Option<f64>,
    #[arg(long)]
    pub fmin: Option<f64>,
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Decimation step a_d.
    #[arg(long)]
    pub decimation: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Number of refinement levels for `verify`.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Wavelet for `verify`: cauchy, gabor or twopeak.
    #[arg(long)]
    pub wavelet: Option<String>,
    /// Worker threads for `evaluate` (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Leave the lowpass row out of the spectral convergence.
    #[arg(long = "exclude-lowpass")]
    pub exclude_lowpass: bool,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub channels: usize,
    pub bins_per_octave: Option<f64>,
    pub min_scale: Option<f64>,
    pub fmin: Option<f64>,
    pub fmax: Option<f64>,
    pub decimation: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub momentum: f64,
    pub refine: usize,
    pub wavelet: String,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fglim = FglimConfig::default();
        Self {
            alpha: 30.0,
            beta: 0.0,
            gamma_re: 1.0,
            gamma_im: 0.0,
            channels: 100,
            bins_per_octave: None,
            min_scale: None,
            fmin: None,
            fmax: None,
            decimation: 5,
            tol: DEFAULT_TOL,
            seed: 0,
            max_iter: fglim.max_iter,
            momentum: fglim.momentum,
            refine: 3,
            wavelet: "cauchy".into(),
            workers: None,
            out: None,
            report: None,
        }
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return invalid(format!("config line {}: expected key = value", i + 1));
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn take<T: FromStr>(map: &mut HashMap<String, String>, keys: &[&str]) -> Result<Option<T>> {
    let mut found = None;
    for key in keys {
        if let Some(v) = map.remove(*key) {
            found = Some(
                v.parse::<T>()
                    .map_err(|_| Error::InvalidParameter(format!("config key '{key}': cannot parse '{v}'")))?,
            );
        }
    }
    Ok(found)
}

impl RunOptions {
    /// Merges flags over the config file over defaults and validates the
    /// wavelet and iteration parameters.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut map = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => HashMap::new(),
        };
        let d = RunConfig::default();
        let cfg = RunConfig {
            alpha: self.alpha.or(take(&mut map, &["alpha"])?).unwrap_or(d.alpha),
            beta: self.beta.or(take(&mut map, &["beta"])?).unwrap_or(d.beta),
            gamma_re: self.gamma_re.or(take(&mut map, &["gamma_re"])?).unwrap_or(d.gamma_re),
            gamma_im: self.gamma_im.or(take(&mut map, &["gamma_im"])?).unwrap_or(d.gamma_im),
            channels: self.channels.or(take(&mut map, &["channels", "K"])?).unwrap_or(d.channels),
            bins_per_octave: self.bins_per_octave.or(take(&mut map, &["bins_per_octave", "B"])?),
            min_scale: self.min_scale.or(take(&mut map, &["min_scale", "y_m"])?),
            fmin: self.fmin.or(take(&mut map, &["fmin"])?),
            fmax: self.fmax.or(take(&mut map, &["fmax"])?),
            decimation: self.decimation.or(take(&mut map, &["decimation", "a_d"])?).unwrap_or(d.decimation),
            tol: self.tol.or(take(&mut map, &["tol"])?).unwrap_or(d.tol),
            seed: self.seed.or(take(&mut map, &["seed"])?).unwrap_or(d.seed),
            max_iter: self.max_iter.or(take(&mut map, &["max_iter"])?).unwrap_or(d.max_iter),
            momentum: self.momentum.or(take(&mut map, &["momentum"])?).unwrap_or(d.momentum),
            refine: self.refine.or(take(&mut map, &["refine"])?).unwrap_or(d.refine),
            wavelet: self.wavelet.clone().or(take(&mut map, &["wavelet"])?).unwrap_or(d.wavelet),
            workers: self.workers.or(take(&mut map, &["workers"])?),
            out: self.out.clone().or(take(&mut map, &["out"])?),
            report: self.report.clone().or(take(&mut map, &["report"])?),
        };
        if let Some(key) = map.keys().next() {
            return invalid(format!("unknown config key '{key}'"));
        }
        cfg.params()?;
        cfg.fglim().validate()?;
        if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return invalid(format!("tol must lie in (0, 1), got {}", cfg.tol));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<CauchyParams> {
        CauchyParams::new(self.alpha, self.beta, self.gamma_re, self.gamma_im, true)
    }

    pub fn fglim(&self) -> FglimConfig {
        FglimConfig {
            max_iter: self.max_iter,
            momentum: self.momentum,
            seed: self.seed,
            ..FglimConfig::default()
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            tol: self.tol,
            seed: self.seed,
            fglim: self.fglim(),
        }
    }

    /// Filter bank for a signal of `length` samples. Centers default to
    /// `sample_rate/20 · [2^-6, 2^3.3]`.
    pub fn spec(&self, length: usize, sample_rate: f64) -> Result<FilterBankSpec> {
        self.spec_with(length, sample_rate, self.alpha, self.decimation, self.channels)
    }

    fn spec_with(&self, length: usize, sample_rate: f64, alpha: f64, decimation: usize, channels: usize) -> Result<FilterBankSpec> {
        let params = CauchyParams::new(alpha, self.beta, self.gamma_re, self.gamma_im, true)?;
        let fmax = self.fmax.unwrap_or(sample_rate / 20.0 * 2f64.powf(3.3));
        if let Some(b) = self.bins_per_octave {
            let y_m = match self.min_scale {
                Some(y) => y,
                None => params.center_frequency()? / fmax,
            };
            return FilterBankSpec::new(length, sample_rate, channels, b, y_m, decimation);
        }
        let fmin = self.fmin.unwrap_or(sample_rate / 20.0 * 2f64.powf(-6.0));
        FilterBankSpec::from_range(length, sample_rate, channels, fmin, fmax, decimation, &params)
    }

    pub fn frame(&self, length: usize, sample_rate: f64) -> Result<WaveletFrame> {
        WaveletFrame::new(self.spec(length, sample_rate)?, self.params()?)
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotInvertible(_) | Error::NoConvergence { .. } => 1,
        Error::InvalidParameter(_) | Error::DimensionMismatch(_) | Error::GridTooCoarse(_) => 3,
        Error::Corrupt(_) | Error::UnsupportedVersion(_) | Error::UnsupportedAudio(_) | Error::Wav(_) | Error::Io(_) => 4,
    }
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { input, opts } => cmd_analyze(&input, &opts.resolve()?),
        Command::Synth { grid, opts } => cmd_synth(&grid, &opts.resolve()?),
        Command::Reconstruct { input, method, opts } => {
            cmd_reconstruct(&input, method, &opts.resolve()?, !opts.exclude_lowpass)
        }
        Command::Evaluate {
            corpus,
            tuples,
            preset,
            methods,
            seconds,
            opts,
        } => {
            let cfg = opts.resolve()?;
            let tuples = resolve_tuples(&tuples, preset.as_deref(), &cfg)?;
            let methods = match methods {
                Some(list) => list.split(',').map(|m| Method::from_str(m.trim())).collect::<Result<Vec<_>>>()?,
                None => Method::ALL.to_vec(),
            };
            cmd_evaluate(&corpus, &tuples, &methods, seconds, &cfg)
        }
        Command::Verify { check, opts } => cmd_verify(check, &opts.resolve()?),
        Command::Reassign {
            input,
            tmin,
            tmax,
            nt,
            nf,
            opts,
        } => cmd_reassign(&input, tmin, tmax, nt, nf, &opts.resolve()?),
    }
}

fn required_out(cfg: &RunConfig) -> Result<&Path> {
    cfg.out.as_deref().ok_or_else(|| Error::InvalidParameter("--out is required".into()))
}

fn wav_rate(rate: f64) -> Result<u32> {
    if rate.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&rate) {
        return invalid(format!("sample rate {rate} cannot be stored in a WAV file"));
    }
    Ok(rate as u32)
}

pub fn cmd_analyze(input: &Path, cfg: &RunConfig) -> Result<()> {
    let audio = read_wav(input)?;
    let out = required_out(cfg)?;
    let frame = cfg.frame(audio.samples.len(), audio.sample_rate as f64)?;
    let grid = frame.analyze(&audio.samples)?;
    save_grid(out, &grid)?;
    let spec = frame.spec();
    println!("rows: {} (K = {} plus lowpass), columns: {}", spec.channels + 1, spec.channels, spec.hops());
    println!("redundancy K/a_d: {:.4}", spec.redundancy());
    match frame.frame_bound_ratio(100) {
        Ok(ratio) => println!("frame bound ratio (estimate): {ratio:.6}"),
        Err(e) => println!("frame bound ratio (estimate): unavailable ({e})"),
    }
    Ok(())
}

pub fn cmd_synth(grid: &Path, cfg: &RunConfig) -> Result<()> {
    let grid = load_grid(grid)?;
    let out = required_out(cfg)?;
    let frame = WaveletFrame::new(grid.layout.spec, grid.layout.params)?;
    let signal = frame.synthesize(&grid)?;
    let clipped = write_wav(out, &signal, wav_rate(grid.layout.spec.sample_rate)?, WavFormat::Float32)?;
    if clipped > 0 {
        eprintln!("warning: {clipped} samples clipped");
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn report_for(id: &str, method: Method, frame: &WaveletFrame, sc_db: f64, runtime_ms: f64, seed: u64) -> ReconstructionReport {
    let layout = frame.layout();
    ReconstructionReport {
        signal_id: id.to_string(),
        method,
        alpha: layout.params.alpha(),
        beta: layout.params.beta(),
        gamma_re: layout.params.gamma().re,
        gamma_im: layout.params.gamma().im,
        decimation: layout.spec.decimation,
        channels: layout.spec.channels,
        bins_per_octave: layout.spec.bins_per_octave,
        sc_db,
        runtime_ms,
        seed,
    }
}

pub fn cmd_reconstruct(input: &Path, method: Method, cfg: &RunConfig, include_lowpass: bool) -> Result<()> {
    let is_wav = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    let (frame, target) = if is_wav {
        let audio = read_wav(input)?;
        let frame = cfg.frame(audio.samples.len(), audio.sample_rate as f64)?;
        let m = frame.analyze(&audio.samples)?.magnitude();
        (frame, m)
    } else {
        let grid = load_grid(input)?;
        (WaveletFrame::new(grid.layout.spec, grid.layout.params)?, grid.magnitude())
    };
    let out = required_out(cfg)?;
    let rec = reconstruct(&frame, &target, method, &cfg.pipeline())?;
    let sc_db = if include_lowpass {
        rec.sc_db
    } else {
        crate::metrics::spectral_convergence_with(&frame.analyze(&rec.signal)?.magnitude(), &target, false)?
    };
    let clipped = write_wav(out, &rec.signal, wav_rate(frame.spec().sample_rate)?, WavFormat::Float32)?;
    if clipped > 0 {
        eprintln!("warning: {clipped} samples clipped");
    }
    let report = report_for(&stem(input), method, &frame, sc_db, rec.runtime_ms, cfg.seed);
    println!("{method}: SC = {sc_db:.4} dB");
    if let Some(path) = &cfg.report {
        write_reports(BufWriter::new(File::create(path)?), &[report])?;
    }
    Ok(())
}

/// Parameter tuple (α, a_d, K).
pub type Tuple = (f64, usize, usize);

pub const METHODS_PRESET: [Tuple; 3] = [(30.0, 5, 100), (300.0, 12, 240), (3000.0, 20, 400)];
pub const REDUNDANCY_PRESET: [Tuple; 4] = [(1000.0, 30, 90), (1000.0, 25, 125), (1000.0, 18, 180), (1000.0, 10, 300)];

fn parse_tuple(text: &str) -> Result<Tuple> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::InvalidParameter(format!("tuple '{text}' must read alpha,a_d,K"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok((
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
    ))
}

fn resolve_tuples(tuples: &[String], preset: Option<&str>, cfg: &RunConfig) -> Result<Vec<Tuple>> {
    let mut out: Vec<Tuple> = match preset {
        None => Vec::new(),
        Some("methods") => METHODS_PRESET.to_vec(),
        Some("redundancy") => REDUNDANCY_PRESET.to_vec(),
        Some(other) => return invalid(format!("unknown preset '{other}' (expected methods or redundancy)")),
    };
    for t in tuples {
        out.push(parse_tuple(t)?);
    }
    if out.is_empty() {
        out.push((cfg.alpha, cfg.decimation, cfg.channels));
    }
    Ok(out)
}

/// Per-signal rows followed by `mean` and `std` rows per (method, tuple).
pub fn evaluation_rows(reports: &[ReconstructionReport]) -> Vec<ReconstructionReport> {
    let mut groups: Vec<(Method, f64, usize, usize)> = Vec::new();
    for r in reports {
        let key = (r.method, r.alpha, r.decimation, r.channels);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut out = reports.to_vec();
    for (method, alpha, decimation, channels) in groups {
        let members: Vec<&ReconstructionReport> = reports
            .iter()
            .filter(|r| r.method == method && r.alpha == alpha && r.decimation == decimation && r.channels == channels)
            .collect();
        let sc: Vec<f64> = members.iter().map(|r| r.sc_db).collect();
        let rt: Vec<f64> = members.iter().map(|r| r.runtime_ms).collect();
        let (sc_mean, sc_std) = mean_std(&sc);
        let (rt_mean, rt_std) = mean_std(&rt);
        for (id, sc_db, runtime_ms) in [("mean", sc_mean, rt_mean), ("std", sc_std, rt_std)] {
            out.push(ReconstructionReport {
                signal_id: id.to_string(),
                sc_db,
                runtime_ms,
                ..members[0].clone()
            });
        }
    }
    out
}

/// Runs all methods on all signals for every tuple. Failures are logged
/// and skipped; the result holds the successful runs in a fixed order.
pub fn evaluate_corpus(
    signals: &[(String, Vec<f64>, f64)],
    tuples: &[Tuple],
    methods: &[Method],
    cfg: &RunConfig,
) -> Vec<ReconstructionReport> {
    let jobs: Vec<(usize, usize)> = (0..tuples.len())
        .flat_map(|t| (0..signals.len()).map(move |s| (t, s)))
        .collect();
    let results: Vec<Vec<ReconstructionReport>> = jobs
        .par_iter()
        .map(|&(t, s)| {
            let (alpha, decimation, channels) = tuples[t];
            let (id, samples, rate) = &signals[s];
            let run = || -> Result<Vec<ReconstructionReport>> {
                let len = samples.len() / decimation * decimation;
                let spec = cfg.spec_with(len, *rate, alpha, decimation, channels)?;
                let params = CauchyParams::new(alpha, cfg.beta, cfg.gamma_re, cfg.gamma_im, true)?;
                let frame = WaveletFrame::new(spec, params)?;
                let target = frame.analyze(&samples[..len])?.magnitude();
                let mut rows = Vec::new();
                for &method in methods {
                    match reconstruct(&frame, &target, method, &cfg.pipeline()) {
                        Ok(rec) => rows.push(report_for(id, method, &frame, rec.sc_db, rec.runtime_ms, cfg.seed)),
                        Err(e) => eprintln!("{id} ({alpha},{decimation},{channels}) {method}: {e}"),
                    }
                }
                Ok(rows)
            };
            run().unwrap_or_else(|e| {
                eprintln!("{id} ({alpha},{decimation},{channels}): {e}");
                Vec::new()
            })
        })
        .collect();
    results.into_iter().flatten().collect()
}

pub fn cmd_evaluate(dir: &Path, tuples: &[Tuple], methods: &[Method], seconds: Option<f64>, cfg: &RunConfig) -> Result<()> {
    let corpus = load_corpus(dir)?;
    let signals: Vec<(String, Vec<f64>, f64)> = corpus
        .into_iter()
        .map(|(id, audio)| {
            let rate = audio.sample_rate as f64;
            let mut samples = audio.samples;
            if let Some(s) = seconds {
                samples.truncate((s * rate).floor().max(0.0) as usize);
            }
            (id, samples, rate)
        })
        .collect();
    let reports = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| evaluate_corpus(&signals, tuples, methods, cfg)),
        None => evaluate_corpus(&signals, tuples, methods, cfg),
    };
    if reports.is_empty() {
        return Err(Error::InvalidParameter("every evaluation run failed".into()));
    }
    let rows = evaluation_rows(&reports);
    match &cfg.report {
        Some(path) => write_reports(BufWriter::new(File::create(path)?), &rows)?,
        None => write_reports(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyCheck {
    Wt,
    Cr,
    Laplacian,
    Reassign,
    Ridge,
    Gabor,
}

impl FromStr for VerifyCheck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "wt" => Self::Wt,
            "cr" => Self::Cr,
            "laplacian" => Self::Laplacian,
            "reassign" => Self::Reassign,
            "ridge" => Self::Ridge,
            "gabor" => Self::Gabor,
            _ => return invalid(format!("unknown check '{s}' (expected wt, cr, laplacian, reassign, ridge or gabor)")),
        })
    }
}

// Built-in test signal: a Gaussian-windowed linear chirp around 80 Hz plus
// a short 95 Hz tone burst.
const VERIFY_RATE: f64 = 2048.0;
const VERIFY_LEN: usize = 4096;
const VERIFY_F0: f64 = 80.0;

fn verify_signal() -> Vec<f64> {
    (0..VERIFY_LEN)
        .map(|n| {
            let t = n as f64 / VERIFY_RATE;
            let u = t - 1.0;
            let b = t - 1.02;
            (-u * u / 0.02).exp() * (2.0 * PI * (VERIFY_F0 * u + 40.0 * u * u)).cos()
                + (-b * b / 0.0008).exp() * (2.0 * PI * 95.0 * t).cos()
        })
        .collect()
}

fn verify_wavelet(name: &str, params: &CauchyParams) -> Result<Arc<dyn Wavelet>> {
    Ok(match name {
        "cauchy" => Arc::new(params.peak_normalized()?),
        "gabor" => Arc::new(Gabor::matching(params)?),
        "twopeak" => {
            let a = params.alpha();
            Arc::new(TwoPeak::new(a, 2.3 * a, 0.8)?)
        }
        other => return invalid(format!("unknown wavelet '{other}' (expected cauchy, gabor or twopeak)")),
    })
}

/// Runs one check on the built-in chirp and returns its CSV rows.
pub fn verify_rows(check: VerifyCheck, cfg: &RunConfig) -> Result<Vec<VerifyRow>> {
    if cfg.refine == 0 {
        return invalid("--refine must be at least 1");
    }
    let params = cfg.params()?;
    let wavelet = verify_wavelet(&cfg.wavelet, &params)?;
    let xi_b = wavelet.peak_frequency();
    let analyzer = DenseAnalyzer::new(&verify_signal(), VERIFY_RATE, wavelet)?;
    let y0 = xi_b / VERIFY_F0;
    let plan = RefinementPlan::new(
        linspace(0.96, 1.04, 7),
        linspace(0.85 * y0, 1.2 * y0, 7),
        0.04 / VERIFY_F0,
        cfg.refine,
    )?;
    match check {
        VerifyCheck::Wt => verify::wt_derivative_check(&analyzer, &plan),
        VerifyCheck::Cr => verify::cr_residual(&analyzer, &params, &plan),
        VerifyCheck::Laplacian => verify::laplacian_check(&analyzer, &params, &plan),
        VerifyCheck::Reassign => verify::reassignment_check(&analyzer, &params, &plan),
        VerifyCheck::Ridge => {
            let ys = linspace(0.4 * y0, 2.5 * y0, 120);
            let xs = linspace(0.9, 1.1, 9);
            (0..cfg.refine)
                .map(|level| {
                    let h = plan.spacing(level);
                    let sets = verify::ridge_points(&analyzer, xi_b, &xs, &ys, h)?;
                    let mismatch = 1.0 - sets.coincidence();
                    Ok((h, mismatch, sets.magnitude.len().abs_diff(sets.phase.len()) as f64))
                })
                .collect::<Result<Vec<_>>>()
                .map(|levels| {
                    let mut rows = Vec::new();
                    for (h, rms, max) in levels {
                        rows.push(VerifyRow {
                            check: "ridge_mismatch".into(),
                            spacing: h,
                            rms_residual: rms,
                            max_residual: max,
                            refinement_ratio: rows.last().map_or(f64::NAN, |p: &VerifyRow| p.rms_residual / rms),
                        });
                    }
                    rows
                })
        }
        VerifyCheck::Gabor => {
            let omega = 2.0 * PI * xi_b;
            let mut rows: Vec<VerifyRow> = Vec::new();
            for level in 0..cfg.refine {
                let h = plan.spacing(level);
                let g = verify::gabor_reassignment_special_case(&verify_signal(), VERIFY_RATE, omega, &plan.xs, &plan.ys, h)?;
                let diffs: Vec<f64> = g
                    .mask
                    .indexed_iter()
                    .filter(|(_, &k)| k)
                    .map(|(i, _)| g.time_quotient[i] - g.time_magnitude[i])
                    .collect();
                let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len().max(1) as f64).sqrt();
                rows.push(VerifyRow {
                    check: "gabor_time".into(),
                    spacing: h,
                    rms_residual: rms,
                    max_residual: g.agreement(),
                    refinement_ratio: rows.last().map_or(f64::NAN, |p| p.rms_residual / rms),
                });
            }
            Ok(rows)
        }
    }
}

pub fn cmd_verify(check: VerifyCheck, cfg: &RunConfig) -> Result<()> {
    let rows = verify_rows(check, cfg)?;
    match &cfg.out {
        Some(path) => verify::write_rows(BufWriter::new(File::create(path)?), &rows),
        None => verify::write_rows(std::io::stdout().lock(), &rows),
    }
}

pub fn cmd_reassign(input: &Path, tmin: Option<f64>, tmax: Option<f64>, nt: usize, nf: usize, cfg: &RunConfig) -> Result<()> {
    let audio = read_wav(input)?;
    let rate = audio.sample_rate as f64;
    let duration = audio.samples.len() as f64 / rate;
    let params = cfg.params()?.peak_normalized()?;
    let fmin = cfg.fmin.unwrap_or(rate / 20.0 * 2f64.powf(-6.0));
    let fmax = cfg.fmax.unwrap_or(rate / 20.0 * 2f64.powf(3.3));
    if nt == 0 || nf < 2 || !(fmin > 0.0 && fmax > fmin) {
        return invalid("reassignment needs nt >= 1, nf >= 2 and 0 < fmin < fmax");
    }
    let xs = linspace(tmin.unwrap_or(0.0), tmax.unwrap_or(duration), nt);
    let freqs: Vec<f64> = (0..nf).map(|i| fmin * (fmax / fmin).powf(i as f64 / (nf - 1) as f64)).collect();
    let analyzer = DenseAnalyzer::new(&audio.samples, rate, Arc::new(params))?.with_convention(Convention::FreqConvention);
    let h = 0.01 * params.center_frequency()? / fmax;
    let r = verify::reassignment_map(&analyzer, &params, &xs, &freqs, h)?;
    let mut w: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(w, "x,xi,magnitude_ok,x_hat_quotient,xi_hat_quotient,x_hat_magnitude,xi_hat_magnitude")?;
    for ((iy, ix), &keep) in r.quotient.mask.indexed_iter() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            xs[ix],
            freqs[iy],
            u8::from(keep),
            r.quotient.time[[iy, ix]],
            r.quotient.frequency[[iy, ix]],
            r.magnitude.time[[iy, ix]],
            r.magnitude.frequency[[iy, ix]]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Magnitudes of a saved grid, for callers that only need the scalogram.
pub fn load_magnitude(path: &Path) -> Result<MagnitudeGrid> {
    Ok(load_grid(path)?.magnitude())
}
