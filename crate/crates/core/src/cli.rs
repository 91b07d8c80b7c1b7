//! Experiment pipelines behind the `otaemu` binary.
//!
//! Each `cmd_*` function reads its inputs, writes one data file atomically
//! and a sidecar `<output>.log` with run metadata, and returns the process
//! exit status: 0 on success, 2 for configuration errors and 3 for data
//! errors. The pipelines themselves ([`sweep`], [`emulate`], [`analyze`])
//! work on in-memory values.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{
    amplitude_db, delay_ns, spreading_function, tf_to_cir, time_variant_cir, time_variant_tf,
    total_power_trace,
};
use crate::chain::apply_chain;
use crate::config::{EqualizerMode, ExperimentConfig, SignalConfig, SignalKind, TraceSource};
use crate::dft;
use crate::equalizer::{apply_equalizer, calibrate_one_tap_with, calibrate_per_subband};
use crate::error::{Error, Result};
use crate::playback::{encode_trace, load_trace, synth_v2i_trace, write_atomic, TraceFormat};
use crate::signal_io::{decode_signal, encode_signal, read_signal};
use crate::subband::{stitch_equalized, StitchPiece};
use crate::tdl::{channel_frequency_response, emulate_time_variant};
use crate::types::{
    ChannelSnapshot, ComplexSignal, EqualizerCoeffs, FrequencyGrid, FrequencyResponse, SnapshotSequence,
    SubBand, Tap,
};

/// Outcome of a command: exit status and the summary line for stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Status {
    pub code: i32,
    pub summary: String,
}

impl Status {
    fn code(code: i32) -> Self {
        Self {
            code,
            summary: String::new(),
        }
    }

    pub fn success(&self) -> bool {
        self.code == EXIT_OK
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Exit status for an error raised after the config was loaded.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::NonPositiveInput { .. } | Error::InvalidGrid(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

/// Result of a frequency sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Stitched response over the usable bands, absolute frequencies.
    pub response: FrequencyResponse,
    /// Sub-band index owning each bin of `response`.
    pub owner: Vec<Option<usize>>,
    pub pieces: Vec<StitchPiece>,
    pub coeffs: Vec<EqualizerCoeffs>,
    /// Largest peak-to-peak magnitude inside a single usable band, dB.
    pub in_band_p2p_db: f64,
    /// Peak-to-peak magnitude over the whole stitched response, dB.
    pub stitched_p2p_db: f64,
}

impl SweepReport {
    pub fn summary(&self) -> String {
        format!(
            "bands={} points={} in_band_p2p_db={:.6} stitched_p2p_db={:.6}",
            self.pieces.len(),
            self.response.len(),
            self.in_band_p2p_db,
            self.stitched_p2p_db
        )
    }

    /// `frequency_hz,mag_db,phase_rad[,subband]` for every present bin.
    pub fn to_csv(&self) -> String {
        let multi = self.pieces.len() > 1;
        let mut out = String::from("frequency_hz,mag_db,phase_rad");
        out.push_str(if multi { ",subband\n" } else { "\n" });
        for k in 0..self.response.len() {
            if !self.response.is_present(k) {
                continue;
            }
            let v = self.response.values[k];
            let _ = write!(
                out,
                "{},{},{}",
                self.response.frequency(k),
                amplitude_db(v.norm()),
                v.arg()
            );
            if multi {
                let _ = write!(out, ",{}", self.owner[k].unwrap_or(usize::MAX));
            }
            out.push('\n');
        }
        out
    }
}

fn measure_band(cfg: &ExperimentConfig, band: &SubBand) -> Result<StitchPiece> {
    let grid = FrequencyGrid::new(-band.bandwidth / 2.0, cfg.sweep.step_hz, cfg.sweep.points())?;
    let values = grid
        .frequencies()
        .map(|f| cfg.chain.response_at(band.center_frequency + f))
        .collect();
    Ok(StitchPiece {
        subband: *band,
        response: FrequencyResponse::from_grid(&grid, values)?,
    })
}

fn p2p_db(values: impl Iterator<Item = Complex64>) -> f64 {
    let (lo, hi) = values
        .map(|v| v.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    if hi == 0.0 {
        return 0.0;
    }
    amplitude_db(hi) - amplitude_db(lo)
}

/// Sweeps the chain band by band, equalizes each band as configured and
/// stitches the usable parts.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let bands = match cfg.subband_plan()? {
        Some(plan) => plan.subbands,
        None => vec![cfg.sweep.subband()?],
    };
    let pieces = bands
        .iter()
        .map(|b| measure_band(cfg, b))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = match cfg.equalizer.mode {
        EqualizerMode::None => vec![EqualizerCoeffs::identity(); pieces.len()],
        EqualizerMode::Fixed => vec![cfg.equalizer.fixed_coeffs()?; pieces.len()],
        EqualizerMode::Calibrate => calibrate_per_subband(&pieces, &cfg.equalizer.calibration_options())?,
    };
    let response = stitch_equalized(&pieces, &coeffs)?;

    let eps = 1e-6 * cfg.sweep.step_hz;
    let owner: Vec<Option<usize>> = (0..response.len())
        .map(|k| {
            let f = response.frequency(k);
            response.is_present(k).then(|| {
                pieces.iter().position(|p| {
                    let (lo, hi) = p.subband.usable_interval();
                    f >= lo - eps && f < hi - eps
                })
            })?
        })
        .collect();
    let in_band_p2p_db = (0..pieces.len())
        .map(|i| {
            p2p_db(
                (0..response.len())
                    .filter(|&k| owner[k] == Some(i))
                    .map(|k| response.values[k]),
            )
        })
        .fold(0.0, f64::max);
    let stitched_p2p_db = p2p_db(
        (0..response.len())
            .filter(|&k| response.is_present(k))
            .map(|k| response.values[k]),
    );
    Ok(SweepReport {
        response,
        owner,
        pieces,
        coeffs,
        in_band_p2p_db,
        stitched_p2p_db,
    })
}

/// Snapshot sequence named by `[trace]`. Inline traces are stamped at
/// `start_time`.
pub fn trace_from_config(cfg: &ExperimentConfig, start_time: f64) -> Result<SnapshotSequence> {
    match &cfg.trace {
        TraceSource::Identity => SnapshotSequence::new(vec![ChannelSnapshot::new(
            start_time,
            vec![Tap::new(0.0, Complex64::new(1.0, 0.0))],
        )]),
        TraceSource::TwoTap { echo_delay_s } => {
            let mut snap = ChannelSnapshot::two_tap(*echo_delay_s);
            snap.timestamp = start_time;
            SnapshotSequence::new(vec![snap])
        }
        TraceSource::File { path } => load_trace(path),
        TraceSource::Synth => synth_v2i_trace(&cfg.scenario),
    }
}

/// One-tap equalizer for a signal centered at `center` and sampled at
/// `sample_rate`, per `[equalizer]`.
pub fn equalizer_for_signal(
    cfg: &ExperimentConfig,
    center: f64,
    sample_rate: f64,
) -> Result<EqualizerCoeffs> {
    match cfg.equalizer.mode {
        EqualizerMode::None => Ok(EqualizerCoeffs::identity()),
        EqualizerMode::Fixed => cfg.equalizer.fixed_coeffs(),
        EqualizerMode::Calibrate => {
            let points = (sample_rate / cfg.sweep.step_hz).round() as usize;
            let grid = FrequencyGrid::new(-sample_rate / 2.0, cfg.sweep.step_hz, points)?;
            let values = grid
                .frequencies()
                .map(|f| cfg.chain.response_at(center + f))
                .collect();
            let measured = FrequencyResponse::from_grid(&grid, values)?;
            let half = cfg.sweep.usable_fraction * sample_rate / 2.0;
            calibrate_one_tap_with(&measured, (-half, half), &cfg.equalizer.calibration_options())
        }
    }
}

/// Chain, equalizer (both optional per `[emulate]`), then the TDL.
pub fn emulate(cfg: &ExperimentConfig, input: &ComplexSignal) -> Result<ComplexSignal> {
    cfg.validate()?;
    let mut signal = input.clone();
    let seq = trace_from_config(cfg, signal.start_time)?;
    if cfg.emulate.align_to_trace {
        signal.start_time = seq.snapshots.first().ok_or(Error::EmptySequence)?.timestamp;
    }
    if cfg.emulate.apply_chain {
        signal = apply_chain(&signal, &cfg.chain)?;
    }
    if cfg.emulate.equalize {
        let coeffs = equalizer_for_signal(cfg, signal.center_frequency, signal.sample_rate)?;
        signal = apply_equalizer(&signal, &coeffs);
    }
    emulate_time_variant(&signal, &seq, &cfg.tdl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisMode {
    /// Frequency response
    Tf,
    /// Impulse response
    Cir,
    /// Time-variant frequency response
    Tvtf,
    /// Delay-Doppler spreading function
    Spreading,
    /// Total power per snapshot
    Power,
}

pub enum AnalysisInput {
    Trace(SnapshotSequence),
    /// Input and output of a device or emulator.
    SignalPair(ComplexSignal, ComplexSignal),
}

/// Frequency response `Y/X` of a signal pair on the DFT grid of the longer
/// signal, baseband frequencies ascending.
pub fn estimate_tf(input: &ComplexSignal, output: &ComplexSignal) -> Result<FrequencyResponse> {
    if input.sample_rate != output.sample_rate {
        return Err(Error::GridMismatch("signals have different sample rates".into()));
    }
    let n = input.len().max(output.len());
    let pad = |s: &ComplexSignal| {
        let mut v = s.samples.clone();
        v.resize(n, Complex64::new(0.0, 0.0));
        dft::forward(&v)
    };
    let (x, y) = (pad(input), pad(output));
    let floor = 1e-12 * x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let half = n / 2;
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let k = (i + n - half) % n;
        if !(x[k].norm() > floor) {
            return Err(Error::ZeroResponse);
        }
        values.push(y[k] / x[k]);
    }
    let step = input.sample_rate / n as f64;
    FrequencyResponse::new(-(half as f64) * step, step, values)
}

fn tf_csv(tf: &FrequencyResponse) -> String {
    let mut out = String::from("frequency_hz,mag_db,phase_rad\n");
    for (k, v) in tf.values.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", tf.frequency(k), amplitude_db(v.norm()), v.arg());
    }
    out
}

fn cir_csv(tf: &FrequencyResponse, cfg: &ExperimentConfig) -> Result<String> {
    let cir = tf_to_cir(tf, cfg.analysis.window)?;
    let mut out = String::from("delay_ns,mag_db,phase_rad\n");
    for (n, v) in cir.values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            delay_ns(cir.delay(n)),
            amplitude_db(v.norm()),
            v.arg()
        );
    }
    Ok(out)
}

/// Runs one analysis and returns the CSV text and a one-line summary.
pub fn analyze(
    cfg: &ExperimentConfig,
    input: &AnalysisInput,
    mode: AnalysisMode,
) -> Result<(String, String)> {
    let grid = cfg.analysis.grid()?;
    match (input, mode) {
        (AnalysisInput::SignalPair(x, y), AnalysisMode::Tf) => {
            let tf = estimate_tf(x, y)?;
            Ok((tf_csv(&tf), format!("points={}", tf.len())))
        }
        (AnalysisInput::SignalPair(x, y), AnalysisMode::Cir) => {
            let tf = estimate_tf(x, y)?;
            Ok((cir_csv(&tf, cfg)?, format!("points={}", tf.len())))
        }
        (AnalysisInput::SignalPair(..), m) => Err(Error::InvalidConfig(format!(
            "mode {m:?} needs a trace input, not a signal pair"
        ))),
        (AnalysisInput::Trace(seq), AnalysisMode::Tf | AnalysisMode::Cir) => {
            let snap = seq.snapshots.get(cfg.analysis.snapshot).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "analysis.snapshot {} out of range for {} snapshots",
                    cfg.analysis.snapshot,
                    seq.len()
                ))
            })?;
            let tf = channel_frequency_response(snap, &grid)?;
            let summary = format!(
                "snapshot={} timestamp_s={}",
                cfg.analysis.snapshot, snap.timestamp
            );
            if mode == AnalysisMode::Tf {
                Ok((tf_csv(&tf), summary))
            } else {
                Ok((cir_csv(&tf, cfg)?, summary))
            }
        }
        (AnalysisInput::Trace(seq), AnalysisMode::Tvtf) => {
            let tv = time_variant_tf(seq, &grid)?;
            let mut out = String::from("timestamp_s\\frequency_hz");
            for f in grid.frequencies() {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
            for (t, r) in tv.timestamps.iter().zip(&tv.responses) {
                let _ = write!(out, "{t}");
                for v in &r.values {
                    let _ = write!(out, ",{}", amplitude_db(v.norm()));
                }
                out.push('\n');
            }
            Ok((
                out,
                format!("snapshots={} points={} unit=mag_db", seq.len(), grid.points),
            ))
        }
        (AnalysisInput::Trace(seq), AnalysisMode::Spreading) => {
            let cirs = time_variant_cir(seq, &grid, cfg.analysis.window)?;
            let s = spreading_function(&cirs, cfg.analysis.doppler_window)?;
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            let (tau, nu, mag) = s.argmax();
            let summary = format!(
                "argmax_doppler_hz={nu} argmax_delay_ns={} peak_db={} doppler_resolution_hz={}",
                delay_ns(tau),
                amplitude_db(mag),
                s.doppler_resolution()
            );
            Ok((String::from_utf8(buf).expect("CSV is ASCII"), summary))
        }
        (AnalysisInput::Trace(seq), AnalysisMode::Power) => {
            let mut out = String::from("timestamp_s,power_db\n");
            for (t, p) in total_power_trace(seq) {
                let _ = writeln!(out, "{t},{p}");
            }
            Ok((out, format!("snapshots={}", seq.len())))
        }
    }
}

/// Test signal per `[signal]`.
pub fn generate_signal(cfg: &SignalConfig) -> Result<ComplexSignal> {
    let samples = match cfg.kind {
        SignalKind::ImpulseTrain => (0..cfg.samples)
            .map(|i| {
                let v = if i % cfg.period == 0 { 1.0 } else { 0.0 };
                Complex64::new(v, 0.0)
            })
            .collect(),
        SignalKind::Noise => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("finite sigma");
            (0..cfg.samples)
                .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect()
        }
    };
    Ok(ComplexSignal::new(samples, cfg.sample_rate_hz)?
        .with_center_frequency(cfg.center_hz)
        .with_start_time(cfg.start_s))
}

struct Run {
    command: &'static str,
    started: Instant,
    lines: Vec<String>,
}

impl Run {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
            lines: vec![
                format!("command={command}"),
                format!("version={}", env!("CARGO_PKG_VERSION")),
            ],
        }
    }

    fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    /// Writes `data` and the sidecar log, reporting `summary` on stdout.
    fn finish(mut self, output: &Path, data: &[u8], summary: &str) -> Status {
        if let Err(e) = write_atomic(output, data) {
            eprintln!("otaemu {}: cannot write {}: {e}", self.command, output.display());
            return Status::code(EXIT_DATA);
        }
        if !summary.is_empty() {
            self.note("summary", summary);
        }
        self.note("elapsed_ms", self.started.elapsed().as_millis());
        let mut log = self.lines.join("\n");
        log.push('\n');
        let mut log_path = output.as_os_str().to_owned();
        log_path.push(".log");
        if let Err(e) = write_atomic(Path::new(&log_path), log.as_bytes()) {
            eprintln!("otaemu {}: cannot write log: {e}", self.command);
        }
        Status {
            code: EXIT_OK,
            summary: summary.to_string(),
        }
    }

    fn fail(&self, err: &Error) -> Status {
        eprintln!("otaemu {}: {err}", self.command);
        Status::code(exit_code(err))
    }
}

fn load_config(run: &mut Run, path: Option<&Path>) -> std::result::Result<ExperimentConfig, Status> {
    match path {
        Some(p) => {
            run.note("config", p.display());
            ExperimentConfig::load(p).map_err(|e| {
                eprintln!("otaemu {}: {e}", run.command);
                Status::code(EXIT_CONFIG)
            })
        }
        None => Ok(ExperimentConfig::default()),
    }
}

pub fn cmd_sweep(config: &Path, output: &Path) -> Status {
    let mut run = Run::new("sweep");
    let cfg = match load_config(&mut run, Some(config)) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match sweep(&cfg) {
        Ok(report) => run.finish(output, report.to_csv().as_bytes(), &report.summary()),
        Err(e) => run.fail(&e),
    }
}

pub fn cmd_emulate(config: &Path, input: &Path, output: &Path) -> Status {
    let mut run = Run::new("emulate");
    let cfg = match load_config(&mut run, Some(config)) {
        Ok(c) => c,
        Err(code) => return code,
    };
    run.note("input", input.display());
    let result = read_signal(input)
        .and_then(|signal| emulate(&cfg, &signal))
        .and_then(|out| Ok((encode_signal(&out)?, out.len())));
    match result {
        Ok((bytes, n)) => run.finish(output, &bytes, &format!("samples={n}")),
        Err(e) => run.fail(&e),
    }
}

fn read_analysis_input(inputs: &[PathBuf]) -> Result<AnalysisInput> {
    match inputs {
        [trace] => {
            let data = std::fs::read(trace)?;
            if data.starts_with(b"CSIG") {
                return Err(Error::InvalidConfig(
                    "a signal file needs its partner: pass --input twice (input, then output)".into(),
                ));
            }
            load_trace(trace).map(AnalysisInput::Trace)
        }
        [x, y] => Ok(AnalysisInput::SignalPair(
            decode_signal(&std::fs::read(x)?)?,
            decode_signal(&std::fs::read(y)?)?,
        )),
        _ => Err(Error::InvalidConfig(
            "analyze takes one trace or two signal files".into(),
        )),
    }
}

pub fn cmd_analyze(config: Option<&Path>, inputs: &[PathBuf], mode: AnalysisMode, output: &Path) -> Status {
    let mut run = Run::new("analyze");
    let cfg = match load_config(&mut run, config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    for i in inputs {
        run.note("input", i.display());
    }
    run.note("mode", format!("{mode:?}").to_lowercase());
    match read_analysis_input(inputs).and_then(|input| analyze(&cfg, &input, mode)) {
        Ok((csv, summary)) => run.finish(output, csv.as_bytes(), &summary),
        Err(e) => run.fail(&e),
    }
}

pub fn cmd_synth(config: Option<&Path>, output: &Path, format: TraceFormat, seed: Option<u64>) -> Status {
    let mut run = Run::new("synth");
    let mut cfg = match load_config(&mut run, config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        cfg.scenario.seed = seed;
    }
    run.note("seed", cfg.scenario.seed);
    match synth_v2i_trace(&cfg.scenario).and_then(|seq| Ok((encode_trace(&seq, format)?, seq.len()))) {
        Ok((bytes, n)) => run.finish(output, &bytes, &format!("snapshots={n}")),
        Err(e) => run.fail(&e),
    }
}

pub fn cmd_signal(config: Option<&Path>, output: &Path, seed: Option<u64>) -> Status {
    let mut run = Run::new("signal");
    let mut cfg = match load_config(&mut run, config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        cfg.signal.seed = seed;
    }
    run.note("seed", cfg.signal.seed);
    match generate_signal(&cfg.signal).and_then(|s| Ok((encode_signal(&s)?, s.len()))) {
        Ok((bytes, n)) => run.finish(output, &bytes, &format!("samples={n}")),
        Err(e) => run.fail(&e),
    }
}

pub fn cmd_validate(config: &Path) -> Status {
    match ExperimentConfig::load(config) {
        Ok(_) => Status {
            code: EXIT_OK,
            summary: format!("{}: ok", config.display()),
        },
        Err(e) => {
            eprintln!("otaemu validate: {e}");
            Status::code(EXIT_CONFIG)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => TraceFormat::Text,
            FormatArg::Binary => TraceFormat::Binary,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "otaemu", version, about = "Over-the-air channel emulation testbed")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the simulated chain and write frequency_hz,mag_db,phase_rad
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a CSIG signal through chain, equalizer and TDL
    Emulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Analyze a trace, or an input/output signal pair (two --input)
    Analyze {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required = true, num_args = 1)]
        input: Vec<PathBuf>,
        #[arg(long)]
        mode: AnalysisMode,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write the synthetic V2I trace
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a test signal
    Signal {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file against the schema
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command, prints
/// its summary and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let status = match cli.command {
        Command::Sweep { config, output } => cmd_sweep(&config, &output),
        Command::Emulate {
            config,
            input,
            output,
        } => cmd_emulate(&config, &input, &output),
        Command::Analyze {
            config,
            input,
            mode,
            output,
        } => cmd_analyze(config.as_deref(), &input, mode, &output),
        Command::Synth {
            config,
            output,
            format,
            seed,
        } => cmd_synth(config.as_deref(), &output, format.into(), seed),
        Command::Signal { config, output, seed } => cmd_signal(config.as_deref(), &output, seed),
        Command::Validate { config } => cmd_validate(&config),
    };
    if !status.summary.is_empty() {
        println!("{}", status.summary);
    }
    status.code
}
