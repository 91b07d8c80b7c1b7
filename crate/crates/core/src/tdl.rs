//! Tapped-delay-line channel emulator.
//!
//! Every input sample is routed through the taps of the snapshot active at
//! the sample's time, so a snapshot change affects samples entering the line
//! after it, while samples already in flight keep the taps they entered with.
//! Output sample `m` is evaluated as an independent gather over the inputs
//! that can reach it. Because no state carries between output samples, any
//! partition of the output into blocks gives bit-identical results.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    ChannelSnapshot, ComplexSignal, FrequencyGrid, FrequencyResponse, SnapshotSequence,
    DEFAULT_MAX_ACTIVE_TAPS,
};
use crate::window::{kaiser, sinc};

/// How taps change between snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UpdatePolicy {
    /// Taps switch at the snapshot timestamp.
    #[default]
    HardSwitch,
    /// Over `window` seconds after each timestamp the previous and the new
    /// taps are blended linearly.
    LinearCrossfade { window: f64 },
}

/// Realization of delays that fall between samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FractionalDelay {
    #[default]
    NearestSample,
    /// Kaiser-windowed sinc interpolator with `order` coefficients.
    WindowedSinc {
        #[serde(default = "default_sinc_order")]
        order: usize,
        #[serde(default = "default_sinc_beta")]
        beta: f64,
    },
}

fn default_sinc_order() -> usize {
    64
}

fn default_sinc_beta() -> f64 {
    8.0
}

impl FractionalDelay {
    pub fn windowed_sinc() -> Self {
        FractionalDelay::WindowedSinc {
            order: default_sinc_order(),
            beta: default_sinc_beta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdlConfig {
    pub max_active_taps: usize,
    /// Tap-delay resolution in seconds. `None` means one sample period with
    /// nearest-sample delays and no quantization with the windowed sinc.
    pub delay_quantum: Option<f64>,
    pub update_policy: UpdatePolicy,
    pub fractional_delay: FractionalDelay,
    /// Largest tap delay the line can hold, seconds.
    pub max_delay_span: f64,
}

impl Default for TdlConfig {
    fn default() -> Self {
        Self {
            max_active_taps: DEFAULT_MAX_ACTIVE_TAPS,
            delay_quantum: None,
            update_policy: UpdatePolicy::HardSwitch,
            fractional_delay: FractionalDelay::NearestSample,
            max_delay_span: 1e-3,
        }
    }
}

impl TdlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_active_taps == 0 {
            return Err(Error::InvalidConfig("max_active_taps must be at least 1".into()));
        }
        if let Some(q) = self.delay_quantum {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "delay_quantum must be positive, got {q}"
                )));
            }
        }
        if !(self.max_delay_span > 0.0) {
            return Err(Error::InvalidConfig("max_delay_span must be positive".into()));
        }
        match self.update_policy {
            UpdatePolicy::LinearCrossfade { window } if !(window > 0.0 && window.is_finite()) => {
                return Err(Error::InvalidConfig(format!(
                    "crossfade window must be positive, got {window}"
                )));
            }
            _ => {}
        }
        match self.fractional_delay {
            FractionalDelay::WindowedSinc { order, beta } if order < 2 || !(beta >= 0.0) => {
                return Err(Error::InvalidConfig(
                    "windowed sinc needs order >= 2 and a non-negative beta".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Integer-offset coefficients realizing one snapshot at a given sample rate.
/// Negative offsets are the leading half of an interpolation kernel.
#[derive(Debug, Clone)]
struct ExpandedTaps {
    taps: Vec<(isize, Complex64)>,
    /// Largest tap delay rounded up, in samples.
    tail: usize,
    /// Largest positive offset.
    reach: usize,
    /// Largest negative offset, as a positive count.
    lead: usize,
}

fn expand_snapshot(snapshot: &ChannelSnapshot, sample_rate: f64, config: &TdlConfig) -> Result<ExpandedTaps> {
    if snapshot.taps.len() > config.max_active_taps {
        return Err(Error::TooManyTaps {
            count: snapshot.taps.len(),
            max: config.max_active_taps,
        });
    }
    let quantize = |d: f64| match (config.delay_quantum, config.fractional_delay) {
        (Some(q), _) => (d / q).round() * q,
        (None, FractionalDelay::NearestSample) => (d * sample_rate).round() / sample_rate,
        (None, FractionalDelay::WindowedSinc { .. }) => d,
    };
    let mut taps = Vec::new();
    let mut tail = 0usize;
    for tap in &snapshot.taps {
        tap.validate()?;
        if tap.delay > config.max_delay_span {
            return Err(Error::DelayOutOfRange {
                delay: tap.delay,
                max: config.max_delay_span,
            });
        }
        let quantized = quantize(tap.delay);
        let in_samples = quantized * sample_rate;
        tail = tail.max(ceil_samples(tap.delay * sample_rate));
        let nearest = in_samples.round();
        match config.fractional_delay {
            FractionalDelay::WindowedSinc { order, beta } if (in_samples - nearest).abs() > 1e-9 => {
                let half = order as f64 / 2.0;
                let first = in_samples.floor() as isize - (order as isize / 2) + 1;
                for n in first..first + order as isize {
                    let x = n as f64 - in_samples;
                    let c = sinc(x) * kaiser(x / half, beta);
                    if c != 0.0 {
                        taps.push((n, tap.amplitude * c));
                    }
                }
            }
            _ => {
                tail = tail.max(nearest as usize);
                taps.push((nearest as isize, tap.amplitude));
            }
        }
    }
    let reach = taps.iter().map(|t| t.0.max(0) as usize).max().unwrap_or(0);
    let lead = taps.iter().map(|t| (-t.0).max(0) as usize).max().unwrap_or(0);
    Ok(ExpandedTaps {
        taps,
        tail,
        reach,
        lead,
    })
}

/// `ceil` that ignores floating-point noise just above an integer.
fn ceil_samples(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Precomputed routing of a signal through a snapshot sequence.
///
/// Build once, then evaluate any output range with [`render`](Self::render).
pub struct TimeVariantEmulator<'a> {
    input: &'a ComplexSignal,
    expanded: Vec<ExpandedTaps>,
    /// Active snapshot index per input sample.
    segment: Vec<u32>,
    /// Weight of the active snapshot per input sample; the previous snapshot
    /// gets the complement. Empty under hard switching.
    weight: Vec<f64>,
    reach: usize,
    lead: usize,
    output_len: usize,
}

impl<'a> TimeVariantEmulator<'a> {
    pub fn new(input: &'a ComplexSignal, seq: &SnapshotSequence, config: &TdlConfig) -> Result<Self> {
        input.validate()?;
        config.validate()?;
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        seq.check_timestamps()?;
        let first = seq.snapshots[0].timestamp;
        // One part in 1e9 of a sample absorbs rounding in the timestamps.
        let slack = 1e-9 / input.sample_rate;
        if first > input.start_time + slack {
            return Err(Error::UncoveredSignalStart {
                first,
                start: input.start_time,
            });
        }
        let expanded = seq
            .snapshots
            .iter()
            .map(|s| expand_snapshot(s, input.sample_rate, config))
            .collect::<Result<Vec<_>>>()?;
        let tail = expanded.iter().map(|e| e.tail).max().unwrap_or(0);
        let reach = expanded.iter().map(|e| e.reach).max().unwrap_or(0);
        let lead = expanded.iter().map(|e| e.lead).max().unwrap_or(0);
        let output_len = input.len() + tail;

        let n = input.len();
        let fs = input.sample_rate;
        let mut begins: Vec<usize> = seq
            .snapshots
            .iter()
            .map(|snap| ceil_samples((snap.timestamp - input.start_time) * fs).min(n))
            .collect();
        begins[0] = 0;
        begins.push(n);
        let mut segment = vec![0u32; n];
        for (s, w) in begins.windows(2).enumerate() {
            segment[w[0]..w[1].max(w[0])]
                .iter_mut()
                .for_each(|v| *v = s as u32);
        }
        let weight = match config.update_policy {
            UpdatePolicy::HardSwitch => Vec::new(),
            UpdatePolicy::LinearCrossfade { window } => (0..n)
                .map(|i| {
                    let s = segment[i] as usize;
                    if s == 0 {
                        return 1.0;
                    }
                    let since = input.time_of(i) - seq.snapshots[s].timestamp;
                    (since / window).clamp(0.0, 1.0)
                })
                .collect(),
        };
        Ok(Self {
            input,
            expanded,
            segment,
            weight,
            reach,
            lead,
            output_len,
        })
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    fn weight_of(&self, snapshot: usize, n: usize) -> f64 {
        let active = self.segment[n] as usize;
        let w = if self.weight.is_empty() {
            1.0
        } else {
            self.weight[n]
        };
        if active == snapshot {
            w
        } else if active == snapshot + 1 {
            1.0 - w
        } else {
            0.0
        }
    }

    fn sample(&self, m: usize) -> Complex64 {
        let n_in = self.input.len();
        let lo = m.saturating_sub(self.reach);
        let hi = (m + self.lead).min(n_in - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        if lo > hi {
            return acc;
        }
        let first_seg = (self.segment[lo] as usize).saturating_sub(usize::from(!self.weight.is_empty()));
        let last_seg = self.segment[hi] as usize;
        for j in first_seg..=last_seg {
            for &(offset, a) in &self.expanded[j].taps {
                let n = m as isize - offset;
                if n < 0 || n as usize >= n_in {
                    continue;
                }
                let n = n as usize;
                let w = self.weight_of(j, n);
                if w != 0.0 {
                    acc += a * w * self.input.samples[n];
                }
            }
        }
        acc
    }

    /// Output samples for `range`, independent of how the output is split.
    pub fn render(&self, range: Range<usize>) -> Vec<Complex64> {
        range.map(|m| self.sample(m)).collect()
    }

    /// Full output evaluated sequentially.
    pub fn run(&self) -> ComplexSignal {
        self.wrap(self.render(0..self.output_len))
    }

    /// Full output evaluated in parallel over blocks of `block` samples.
    pub fn run_parallel(&self, block: usize) -> ComplexSignal {
        let mut out = vec![Complex64::new(0.0, 0.0); self.output_len];
        out.par_chunks_mut(block.max(1))
            .enumerate()
            .for_each(|(b, chunk)| {
                let base = b * block.max(1);
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = self.sample(base + i);
                }
            });
        self.wrap(out)
    }

    fn wrap(&self, samples: Vec<Complex64>) -> ComplexSignal {
        ComplexSignal {
            samples,
            ..self.input.clone()
        }
    }
}

/// Convolves `signal` with a single time-invariant snapshot. The output is
/// longer than the input by the largest tap delay in samples.
pub fn convolve_snapshot(
    signal: &ComplexSignal,
    snapshot: &ChannelSnapshot,
    config: &TdlConfig,
) -> Result<ComplexSignal> {
    let seq = SnapshotSequence {
        snapshots: vec![ChannelSnapshot {
            timestamp: signal.start_time,
            taps: snapshot.taps.clone(),
        }],
        metadata: Default::default(),
    };
    Ok(TimeVariantEmulator::new(signal, &seq, config)?.run_parallel(DEFAULT_BLOCK))
}

const DEFAULT_BLOCK: usize = 8192;

/// Runs `signal` through the time-variant channel `seq`. The last snapshot
/// stays active until the end of the signal.
pub fn emulate_time_variant(
    signal: &ComplexSignal,
    seq: &SnapshotSequence,
    config: &TdlConfig,
) -> Result<ComplexSignal> {
    Ok(TimeVariantEmulator::new(signal, seq, config)?.run_parallel(DEFAULT_BLOCK))
}

/// Closed-form `H(f) = Σ a_k e^{-j2π f d_k}` on `grid`.
pub fn channel_frequency_response(
    snapshot: &ChannelSnapshot,
    grid: &FrequencyGrid,
) -> Result<FrequencyResponse> {
    grid.validate()?;
    for tap in &snapshot.taps {
        tap.validate()?;
    }
    let values = grid
        .frequencies()
        .map(|f| {
            snapshot
                .taps
                .iter()
                .map(|t| t.amplitude * Complex64::from_polar(1.0, -2.0 * PI * f * t.delay))
                .sum()
        })
        .collect();
    FrequencyResponse::from_grid(grid, values)
}
