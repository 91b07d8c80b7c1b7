//! Measured-channel playback: snapshot trace files, reduction of dense
//! impulse responses to a few active taps, and a synthetic
//! vehicle-to-infrastructure scenario standing in for measured data.
//!
//! # Text trace format
//!
//! UTF-8, `\n`-terminated lines, comma-separated fields, `.` decimal point.
//!
//! ```text
//! CHTRACE,version=1,scenario=v2i,speed_mps=14
//! 2.42,0.0000000261,0.0931,-0.0815,0.0000000318,-0.0712,0.0301
//! ```
//!
//! The header carries the format version followed by metadata `key=value`
//! pairs; `%`, `,`, `=`, CR and LF inside keys or values are percent-encoded.
//! Each further line is one snapshot: the timestamp in seconds followed by
//! `delay_s,amp_real,amp_imag` triples. Numbers are written in shortest
//! round-trip form so a save/load cycle is bit-exact.
//!
//! # Binary trace format
//!
//! Little-endian: magic `CHEM1`, `u32` snapshot count, then per snapshot an
//! `f64` timestamp, a `u32` tap count and `f64` triples
//! `(delay, re, im)`. The binary form carries no metadata.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    normalize_snapshot, ChannelSnapshot, ImpulseResponse, NormalizeOptions, SnapshotSequence, Tap,
    DEFAULT_MAX_ACTIVE_TAPS, SPEED_OF_LIGHT,
};

pub const TEXT_MAGIC: &str = "CHTRACE";
pub const BINARY_MAGIC: &[u8; 5] = b"CHEM1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Text,
    Binary,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '%' | ',' | '=' | '\n' | '\r' => out.push_str(&format!("%{:02X}", ch as u32)),
            _ => out.push(ch),
        }
    }
    out
}

fn unescape(s: &str, locus: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s
                .get(i + 1..i + 3)
                .ok_or_else(|| parse_err(locus, "truncated escape"))?;
            let b = u8::from_str_radix(hex, 16).map_err(|_| parse_err(locus, "bad escape"))?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| parse_err(locus, "escape produced invalid UTF-8"))
}

fn parse_err(locus: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        locus: locus.to_string(),
        message: message.into(),
    }
}

/// Writes `seq` in the text format.
pub fn write_text<W: Write>(seq: &SnapshotSequence, out: &mut W) -> Result<()> {
    write!(out, "{TEXT_MAGIC},version={FORMAT_VERSION}")?;
    for (k, v) in &seq.metadata {
        write!(out, ",{}={}", escape(k), escape(v))?;
    }
    writeln!(out)?;
    for snap in &seq.snapshots {
        write!(out, "{}", snap.timestamp)?;
        for tap in &snap.taps {
            write!(out, ",{},{},{}", tap.delay, tap.amplitude.re, tap.amplitude.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `seq` in the binary format.
pub fn write_binary<W: Write>(seq: &SnapshotSequence, out: &mut W) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(seq.snapshots.len() as u32).to_le_bytes())?;
    for snap in &seq.snapshots {
        out.write_all(&snap.timestamp.to_le_bytes())?;
        out.write_all(&(snap.taps.len() as u32).to_le_bytes())?;
        for tap in &snap.taps {
            out.write_all(&tap.delay.to_le_bytes())?;
            out.write_all(&tap.amplitude.re.to_le_bytes())?;
            out.write_all(&tap.amplitude.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn finish(snapshots: Vec<ChannelSnapshot>, metadata: BTreeMap<String, String>) -> Result<SnapshotSequence> {
    for (i, w) in snapshots.windows(2).enumerate() {
        if !(w[1].timestamp > w[0].timestamp) {
            return Err(Error::InvariantViolation {
                locus: format!("record {}", i + 2),
                message: "timestamps must be strictly increasing".into(),
            });
        }
    }
    Ok(SnapshotSequence { snapshots, metadata })
}

fn normalize_record(
    snap: ChannelSnapshot,
    options: &NormalizeOptions,
    locus: String,
) -> Result<ChannelSnapshot> {
    normalize_snapshot(&snap, options).map_err(|e| match e {
        Error::TooManyTaps { .. } | Error::InvalidTap(_) => Error::InvariantViolation {
            locus,
            message: e.to_string(),
        },
        other => other,
    })
}

/// Parses the text format. Blank lines are ignored.
pub fn read_text<R: BufRead>(input: R, options: &NormalizeOptions) -> Result<SnapshotSequence> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err("line 1", "missing header"))?;
    let header = header?;
    let mut fields = header.trim_end_matches('\r').split(',');
    if fields.next() != Some(TEXT_MAGIC) {
        return Err(parse_err("line 1", format!("expected {TEXT_MAGIC} header")));
    }
    let mut metadata = BTreeMap::new();
    let mut version = None;
    for field in fields {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err("line 1", format!("metadata field `{field}` lacks '='")))?;
        let (k, v) = (unescape(k, "line 1")?, unescape(v, "line 1")?);
        if k == "version" && version.is_none() {
            version = Some(v);
        } else {
            metadata.insert(k, v);
        }
    }
    match version.as_deref() {
        Some("1") => {}
        Some(v) => return Err(parse_err("line 1", format!("unsupported version {v}"))),
        None => return Err(parse_err("line 1", "missing version")),
    }

    let mut snapshots = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let locus = format!("line {}", i + 1);
        if line.trim().is_empty() {
            continue;
        }
        let numbers = line
            .split(',')
            .enumerate()
            .map(|(j, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(&locus, format!("field {} `{f}` is not a number", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if numbers.len() % 3 != 1 {
            return Err(parse_err(
                &locus,
                "expected a timestamp followed by (delay, re, im) triples",
            ));
        }
        let taps = numbers[1..]
            .chunks(3)
            .map(|t| Tap::new(t[0], Complex64::new(t[1], t[2])))
            .collect();
        let snap = ChannelSnapshot::new(numbers[0], taps);
        if !snap.timestamp.is_finite() {
            return Err(Error::InvariantViolation {
                locus,
                message: "timestamp must be finite".into(),
            });
        }
        snapshots.push(normalize_record(snap, options, locus)?);
    }
    finish(snapshots, metadata)
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| parse_err(&format!("byte {}", self.pos), format!("truncated {what}")))?;
        self.pos = end;
        Ok(bytes.try_into().expect("length checked"))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }
}

/// Parses the binary format.
pub fn read_binary(data: &[u8], options: &NormalizeOptions) -> Result<SnapshotSequence> {
    if !data.starts_with(BINARY_MAGIC) {
        return Err(parse_err("byte 0", "missing CHEM1 magic"));
    }
    let mut r = ByteReader {
        data,
        pos: BINARY_MAGIC.len(),
    };
    let count = r.u32("snapshot count")?;
    let mut snapshots = Vec::new();
    for s in 0..count {
        let what = format!("snapshot {}", s + 1);
        let timestamp = r.f64(&what)?;
        let n = r.u32(&what)?;
        let mut taps = Vec::new();
        for _ in 0..n {
            let delay = r.f64(&what)?;
            let re = r.f64(&what)?;
            let im = r.f64(&what)?;
            taps.push(Tap::new(delay, Complex64::new(re, im)));
        }
        if !timestamp.is_finite() {
            return Err(Error::InvariantViolation {
                locus: format!("record {}", s + 1),
                message: "timestamp must be finite".into(),
            });
        }
        snapshots.push(normalize_record(
            ChannelSnapshot::new(timestamp, taps),
            options,
            format!("record {}", s + 1),
        )?);
    }
    if r.pos != data.len() {
        return Err(parse_err(
            &format!("byte {}", r.pos),
            "trailing bytes after last snapshot",
        ));
    }
    finish(snapshots, BTreeMap::new())
}

/// Loads a trace file, detecting the format from its first bytes. Taps are
/// normalized with at most [`DEFAULT_MAX_ACTIVE_TAPS`] per snapshot.
pub fn load_trace(path: impl AsRef<Path>) -> Result<SnapshotSequence> {
    load_trace_with(path, &NormalizeOptions::default())
}

pub fn load_trace_with(path: impl AsRef<Path>, options: &NormalizeOptions) -> Result<SnapshotSequence> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    if data.starts_with(BINARY_MAGIC) {
        read_binary(&data, options)
    } else {
        read_text(&data[..], options)
    }
}

/// Serializes `seq` into memory.
pub fn encode_trace(seq: &SnapshotSequence, format: TraceFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        TraceFormat::Text => write_text(seq, &mut buf)?,
        TraceFormat::Binary => write_binary(seq, &mut buf)?,
    }
    Ok(buf)
}

/// Writes `seq` to `path` atomically (temporary file, then rename).
pub fn save_trace(seq: &SnapshotSequence, path: impl AsRef<Path>, format: TraceFormat) -> Result<()> {
    let data = encode_trace(seq, format)?;
    write_atomic(path.as_ref(), &data)
}

pub(crate) fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Keeps the `k` bins of largest magnitude as taps. Ties go to the earlier
/// bin; zero bins are never selected.
pub fn sparsify(cir: &ImpulseResponse, k: usize, timestamp: f64) -> Result<ChannelSnapshot> {
    let mut order: Vec<usize> = (0..cir.len())
        .filter(|&i| cir.values[i] != Complex64::new(0.0, 0.0))
        .collect();
    order.sort_by(|&a, &b| {
        cir.values[b]
            .norm_sqr()
            .total_cmp(&cir.values[a].norm_sqr())
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let taps = order
        .into_iter()
        .map(|i| Tap::new(cir.delay(i), cir.values[i]))
        .collect();
    normalize_snapshot(
        &ChannelSnapshot::new(timestamp, taps),
        &NormalizeOptions {
            max_active_taps: k.max(1),
            merge_tolerance: 0.0,
        },
    )
}

/// Places each tap on the nearest bin of a delay grid.
pub fn render_cir(
    snapshot: &ChannelSnapshot,
    delay_step: f64,
    len: usize,
    delay_offset: f64,
) -> Result<ImpulseResponse> {
    let mut cir = ImpulseResponse::new(delay_step, vec![Complex64::new(0.0, 0.0); len])?;
    cir.delay_offset = delay_offset;
    for tap in &snapshot.taps {
        let bin = ((tap.delay - delay_offset) / delay_step).round();
        if bin < 0.0 || bin as usize >= len {
            return Err(Error::DelayOutOfRange {
                delay: tap.delay,
                max: delay_offset + (len - 1) as f64 * delay_step,
            });
        }
        cir.values[bin as usize] += tap.amplitude;
    }
    Ok(cir)
}

/// Point scatterer of the synthetic scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    /// Excess delay over the line-of-sight path, seconds.
    pub delay_offset: f64,
    /// Power relative to free-space loss over the scatterer path, dB.
    pub relative_power_db: f64,
    /// Doppler shift while the vehicle moves, Hz.
    pub doppler: f64,
}

/// Vehicle driving straight towards a crossing where an elevated receiver
/// sits. Distances are horizontal along the road.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// m/s
    pub speed: f64,
    /// Hz
    pub carrier: f64,
    /// m
    pub receiver_height: f64,
    /// m
    pub tx_height: f64,
    /// Horizontal distance to the crossing at the first snapshot, m.
    pub initial_distance: f64,
    pub num_snapshots: usize,
    /// Time between first and last snapshot, s.
    pub duration: f64,
    /// Timestamp of the first snapshot, s.
    pub start_time: f64,
    pub scatterers: Vec<Scatterer>,
    /// Power of complex Gaussian noise added to every tap, dB; `None` for a
    /// noiseless trace.
    pub noise_floor_db: Option<f64>,
    pub seed: u64,
    pub max_active_taps: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            speed: 14.0,
            carrier: 60e9,
            receiver_height: 5.0,
            tx_height: 1.5,
            initial_distance: 7.0,
            num_snapshots: 301,
            duration: 53.5e-3,
            start_time: 2.42,
            scatterers: vec![
                Scatterer {
                    delay_offset: 40e-9,
                    relative_power_db: -6.0,
                    doppler: -1200.0,
                },
                Scatterer {
                    delay_offset: 90e-9,
                    relative_power_db: -10.0,
                    doppler: 700.0,
                },
            ],
            noise_floor_db: None,
            seed: 0,
            max_active_taps: DEFAULT_MAX_ACTIVE_TAPS,
        }
    }
}

impl ScenarioConfig {
    /// `v · f_c / c`
    pub fn max_doppler(&self) -> f64 {
        self.speed * self.carrier / SPEED_OF_LIGHT
    }

    pub fn snapshot_spacing(&self) -> f64 {
        self.duration / (self.num_snapshots - 1) as f64
    }

    fn distance_at(&self, t: f64) -> f64 {
        self.initial_distance - self.speed * t
    }

    /// Line-of-sight range at time `t` after the first snapshot.
    pub fn los_range(&self, t: f64) -> f64 {
        self.distance_at(t).hypot(self.receiver_height - self.tx_height)
    }

    /// Range of the ground bounce, via the image of the transmitter.
    pub fn ground_range(&self, t: f64) -> f64 {
        self.distance_at(t).hypot(self.receiver_height + self.tx_height)
    }

    /// Instantaneous line-of-sight Doppler `(v f_c / c) cos θ`.
    pub fn los_doppler(&self, t: f64) -> f64 {
        self.max_doppler() * self.distance_at(t) / self.los_range(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return bad("speed must be non-negative");
        }
        if !(self.carrier > 0.0 && self.carrier.is_finite()) {
            return bad("carrier must be positive");
        }
        if self.num_snapshots < 2 {
            return bad("num_snapshots must be at least 2");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.receiver_height.is_finite()
            && self.tx_height.is_finite()
            && self.initial_distance.is_finite())
        {
            return bad("geometry must be finite");
        }
        if !(self.receiver_height >= 0.0 && self.tx_height >= 0.0) {
            return bad("heights must be non-negative");
        }
        if !self.start_time.is_finite() {
            return bad("start_time must be finite");
        }
        for s in &self.scatterers {
            if !(s.delay_offset > 0.0 && s.delay_offset.is_finite()) {
                return bad("scatterer delay offsets must be positive");
            }
            if !(s.relative_power_db.is_finite() && s.doppler.is_finite()) {
                return bad("scatterer parameters must be finite");
            }
        }
        if self.scatterers.len() + 2 > self.max_active_taps {
            return Err(Error::TooManyTaps {
                count: self.scatterers.len() + 2,
                max: self.max_active_taps,
            });
        }
        Ok(())
    }
}

/// Synthesizes a snapshot trace of the scenario: a line-of-sight tap, a
/// ground reflection (coefficient −1) and one tap per scatterer, each with
/// `1/range` amplitude and carrier phase following its path length.
///
/// Scatterers are static, so their Doppler only appears while the vehicle
/// moves.
pub fn synth_v2i_trace(cfg: &ScenarioConfig) -> Result<SnapshotSequence> {
    cfg.validate()?;
    let dt = cfg.snapshot_spacing();
    let wavenumber = 2.0 * PI * cfg.carrier / SPEED_OF_LIGHT;
    let mut noise = cfg.noise_floor_db.map(|db| {
        let sigma = (10f64.powf(db / 10.0) / 2.0).sqrt();
        (
            ChaCha8Rng::seed_from_u64(cfg.seed),
            Normal::new(0.0, sigma).expect("finite sigma"),
        )
    });
    let options = NormalizeOptions {
        max_active_taps: cfg.max_active_taps,
        merge_tolerance: 0.0,
    };
    let moving = cfg.speed > 0.0;

    let mut snapshots = Vec::with_capacity(cfg.num_snapshots);
    for m in 0..cfg.num_snapshots {
        let t = m as f64 * dt;
        let r_los = cfg.los_range(t);
        let r_gnd = cfg.ground_range(t);
        let los_delay = r_los / SPEED_OF_LIGHT;
        let mut taps = vec![
            Tap::new(los_delay, Complex64::from_polar(1.0 / r_los, -wavenumber * r_los)),
            Tap::new(
                r_gnd / SPEED_OF_LIGHT,
                Complex64::from_polar(-1.0 / r_gnd, -wavenumber * r_gnd),
            ),
        ];
        for s in &cfg.scatterers {
            let delay = los_delay + s.delay_offset;
            let range = delay * SPEED_OF_LIGHT;
            let nu = if moving { s.doppler } else { 0.0 };
            let amp = 10f64.powf(s.relative_power_db / 20.0) / range;
            taps.push(Tap::new(delay, Complex64::from_polar(amp, 2.0 * PI * nu * t)));
        }
        if let Some((rng, normal)) = noise.as_mut() {
            for tap in &mut taps {
                tap.amplitude += Complex64::new(normal.sample(rng), normal.sample(rng));
            }
        }
        let snap = ChannelSnapshot::new(cfg.start_time + t, taps);
        snapshots.push(normalize_snapshot(&snap, &options)?);
    }

    let mut seq = SnapshotSequence::new(snapshots)?;
    for (k, v) in [
        ("scenario", "v2i".to_string()),
        ("speed_mps", cfg.speed.to_string()),
        ("carrier_hz", cfg.carrier.to_string()),
        ("receiver_height_m", cfg.receiver_height.to_string()),
        ("tx_height_m", cfg.tx_height.to_string()),
        ("initial_distance_m", cfg.initial_distance.to_string()),
    ] {
        seq.metadata.insert(k.to_string(), v);
    }
    Ok(seq)
}
