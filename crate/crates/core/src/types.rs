//! Shared domain types: signals, taps, snapshots and responses on uniform grids.
//!
//! Amplitudes are linear complex values throughout. Conversions to dB happen
//! only where data leaves the library (CSV output, summaries).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Number of taps the emulator keeps active at once.
pub const DEFAULT_MAX_ACTIVE_TAPS: usize = 10;

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Center frequency the baseband represents, 0 for pure baseband.
    pub center_frequency: f64,
    /// Time of the first sample in seconds.
    pub start_time: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        let signal = Self {
            samples,
            sample_rate,
            center_frequency: 0.0,
            start_time: 0.0,
        };
        signal.validate()?;
        Ok(signal)
    }

    pub fn with_center_frequency(mut self, center_frequency: f64) -> Self {
        self.center_frequency = center_frequency;
        self
    }

    pub fn with_start_time(mut self, start_time: f64) -> Self {
        self.start_time = start_time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive and finite, got {}",
                self.sample_rate
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if !self.start_time.is_finite() || !self.center_frequency.is_finite() {
            return Err(Error::InvalidSignal(
                "start time and center frequency must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `n`.
    pub fn time_of(&self, n: usize) -> f64 {
        self.start_time + n as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// One delayed, complex-weighted path of a tapped delay line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay in seconds, never negative.
    pub delay: f64,
    /// Linear complex gain.
    pub amplitude: Complex64,
}

impl Tap {
    pub fn new(delay: f64, amplitude: Complex64) -> Self {
        Self { delay, amplitude }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::InvalidTap(format!(
                "delay must be finite and non-negative, got {}",
                self.delay
            )));
        }
        if !(self.amplitude.re.is_finite() && self.amplitude.im.is_finite()) {
            return Err(Error::InvalidTap(format!(
                "amplitude must be finite, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// Tap set valid from `timestamp` until the next snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub timestamp: f64,
    pub taps: Vec<Tap>,
}

impl ChannelSnapshot {
    pub fn new(timestamp: f64, taps: Vec<Tap>) -> Self {
        Self { timestamp, taps }
    }

    /// The two-tap channel `h(τ) = δ(τ) + δ(τ − echo_delay)`.
    pub fn two_tap(echo_delay: f64) -> Self {
        Self::new(
            0.0,
            vec![
                Tap::new(0.0, Complex64::new(1.0, 0.0)),
                Tap::new(echo_delay, Complex64::new(1.0, 0.0)),
            ],
        )
    }

    pub fn max_delay(&self) -> f64 {
        self.taps.iter().map(|t| t.delay).fold(0.0, f64::max)
    }

    /// Sum of tap powers.
    pub fn power(&self) -> f64 {
        self.taps.iter().map(|t| t.amplitude.norm_sqr()).sum()
    }

    /// Checks the invariants a normalized snapshot satisfies.
    pub fn validate(&self, max_active_taps: usize) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::InvalidTap("timestamp must be finite".into()));
        }
        if self.taps.len() > max_active_taps {
            return Err(Error::TooManyTaps {
                count: self.taps.len(),
                max: max_active_taps,
            });
        }
        for tap in &self.taps {
            tap.validate()?;
        }
        if self.taps.windows(2).any(|w| w[1].delay <= w[0].delay) {
            return Err(Error::InvalidTap("tap delays must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Controls how [`normalize_snapshot`] merges and bounds taps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeOptions {
    pub max_active_taps: usize,
    /// Taps whose delay lies within this distance of the first tap of a group
    /// are merged into it. Zero merges only identical delays.
    pub merge_tolerance: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            max_active_taps: DEFAULT_MAX_ACTIVE_TAPS,
            merge_tolerance: 0.0,
        }
    }
}

/// Sorts taps by delay, merges coincident delays by summing amplitudes and
/// drops taps whose amplitude is exactly zero.
///
/// A merged group keeps the delay of its earliest member, so the result is a
/// fixed point of this function.
pub fn normalize_snapshot(snapshot: &ChannelSnapshot, options: &NormalizeOptions) -> Result<ChannelSnapshot> {
    for tap in &snapshot.taps {
        tap.validate()?;
    }
    let mut taps = snapshot.taps.clone();
    taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));

    let mut merged: Vec<Tap> = Vec::with_capacity(taps.len());
    let mut group_start = f64::NEG_INFINITY;
    for tap in taps {
        match merged.last_mut() {
            Some(last) if tap.delay - group_start <= options.merge_tolerance => {
                last.amplitude += tap.amplitude;
            }
            _ => {
                group_start = tap.delay;
                merged.push(tap);
            }
        }
    }
    merged.retain(|t| t.amplitude != Complex64::new(0.0, 0.0));

    if merged.len() > options.max_active_taps {
        return Err(Error::TooManyTaps {
            count: merged.len(),
            max: options.max_active_taps,
        });
    }
    Ok(ChannelSnapshot {
        timestamp: snapshot.timestamp,
        taps: merged,
    })
}

/// Time-ordered channel snapshots plus free-form scenario metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotSequence {
    pub snapshots: Vec<ChannelSnapshot>,
    pub metadata: BTreeMap<String, String>,
}

impl SnapshotSequence {
    pub fn new(snapshots: Vec<ChannelSnapshot>) -> Result<Self> {
        let seq = Self {
            snapshots,
            metadata: BTreeMap::new(),
        };
        seq.check_timestamps()?;
        Ok(seq)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.timestamp).collect()
    }

    pub fn check_timestamps(&self) -> Result<()> {
        for (i, w) in self.snapshots.windows(2).enumerate() {
            if !(w[1].timestamp > w[0].timestamp) {
                return Err(Error::NonIncreasingTimestamps { index: i + 1 });
            }
        }
        Ok(())
    }

    /// Full validation: increasing timestamps and normalized snapshots.
    pub fn validate(&self, max_active_taps: usize) -> Result<()> {
        self.check_timestamps()?;
        for snapshot in &self.snapshots {
            snapshot.validate(max_active_taps)?;
        }
        Ok(())
    }

    pub fn max_delay(&self) -> f64 {
        self.snapshots
            .iter()
            .map(ChannelSnapshot::max_delay)
            .fold(0.0, f64::max)
    }
}

/// Uniform frequency grid: `start + k * step` for `k` in `0..points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, step: f64, points: usize) -> Result<Self> {
        let grid = Self { start, step, points };
        grid.validate()?;
        Ok(grid)
    }

    /// `points` bins of width `span / points` centred on `center`.
    pub fn centered(center: f64, span: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidGrid("grid has no points".into()));
        }
        let step = span / points as f64;
        Self::new(center - span / 2.0, step, points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.points == 0 {
            return Err(Error::InvalidGrid("grid has no points".into()));
        }
        if !self.start.is_finite() {
            return Err(Error::InvalidGrid("start must be finite".into()));
        }
        Ok(())
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |k| self.frequency(k))
    }

    pub fn span(&self) -> f64 {
        self.points as f64 * self.step
    }
}

/// Complex response on a uniform frequency grid.
///
/// `present` marks which bins hold data; `None` means every bin does. Bins
/// flagged absent (stitching guard gaps) carry zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub start_frequency: f64,
    pub frequency_step: f64,
    pub values: Vec<Complex64>,
    pub present: Option<Vec<bool>>,
}

impl FrequencyResponse {
    pub fn new(start_frequency: f64, frequency_step: f64, values: Vec<Complex64>) -> Result<Self> {
        FrequencyGrid::new(start_frequency, frequency_step, values.len())?;
        Ok(Self {
            start_frequency,
            frequency_step,
            values,
            present: None,
        })
    }

    pub fn from_grid(grid: &FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.points
            )));
        }
        Self::new(grid.start, grid.step, values)
    }

    pub fn grid(&self) -> FrequencyGrid {
        FrequencyGrid {
            start: self.start_frequency,
            step: self.frequency_step,
            points: self.values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.start_frequency + k as f64 * self.frequency_step
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.frequency(k)).collect()
    }

    pub fn is_present(&self, k: usize) -> bool {
        self.present.as_ref().is_none_or(|p| p[k])
    }

    pub fn has_gaps(&self) -> bool {
        self.present.as_ref().is_some_and(|p| p.iter().any(|&x| !x))
    }

    /// Same values on a grid moved by `offset` Hz.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            start_frequency: self.start_frequency + offset,
            ..self.clone()
        }
    }

    /// Bin indices whose frequency lies in `[low, high]`.
    pub fn indices_in(&self, low: f64, high: f64) -> std::ops::Range<usize> {
        let eps = 1e-9 * self.frequency_step;
        let first = ((low - self.start_frequency - eps) / self.frequency_step)
            .ceil()
            .max(0.0) as usize;
        let last = ((high - self.start_frequency + eps) / self.frequency_step).floor();
        if last < 0.0 {
            return 0..0;
        }
        let end = (last as usize + 1).min(self.values.len());
        first.min(end)..end
    }

    /// Replaces absent bins by linear interpolation between the nearest present
    /// neighbours. Leading and trailing gaps take the nearest present value.
    pub fn fill_gaps_linear(&self) -> Result<Self> {
        let Some(present) = &self.present else {
            return Ok(self.clone());
        };
        let known: Vec<usize> = (0..present.len()).filter(|&k| present[k]).collect();
        if known.is_empty() {
            return Err(Error::GappedInput);
        }
        let mut values = self.values.clone();
        for k in 0..values.len() {
            if present[k] {
                continue;
            }
            let right = known.partition_point(|&i| i < k);
            values[k] = match (right.checked_sub(1).map(|l| known[l]), known.get(right)) {
                (Some(l), Some(&r)) => {
                    let w = (k - l) as f64 / (r - l) as f64;
                    self.values[l] * (1.0 - w) + self.values[r] * w
                }
                (Some(l), None) => self.values[l],
                (None, Some(&r)) => self.values[r],
                (None, None) => unreachable!(),
            };
        }
        Ok(Self {
            values,
            present: None,
            ..*self
        })
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Peak-to-peak magnitude fluctuation in dB over the present bins of `range`.
    pub fn peak_to_peak_db(&self, range: std::ops::Range<usize>) -> f64 {
        let (lo, hi) = range
            .filter(|&k| self.is_present(k))
            .map(|k| 20.0 * self.values[k].norm().log10())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }
}

/// Complex response on a uniform delay grid: bin `n` sits at
/// `delay_offset + n * delay_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub delay_step: f64,
    pub values: Vec<Complex64>,
    pub delay_offset: f64,
    /// First frequency of the grid this response was transformed from; kept so
    /// the inverse transform lands on the same grid.
    pub start_frequency: f64,
}

impl ImpulseResponse {
    pub fn new(delay_step: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(delay_step.is_finite() && delay_step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "delay step must be positive, got {delay_step}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidGrid("impulse response is empty".into()));
        }
        Ok(Self {
            delay_step,
            values,
            delay_offset: 0.0,
            start_frequency: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn delay(&self, n: usize) -> f64 {
        self.delay_offset + n as f64 * self.delay_step
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Index of the largest magnitude, first one on ties.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() > self.values[best].norm() {
                best = i;
            }
        }
        best
    }
}

/// One sub-band of a wideband plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubBand {
    pub center_frequency: f64,
    pub bandwidth: f64,
    /// Portion of `bandwidth` not cut by front-end filtering, in (0, 1].
    pub usable_fraction: f64,
}

impl SubBand {
    pub fn new(center_frequency: f64, bandwidth: f64, usable_fraction: f64) -> Result<Self> {
        let band = Self {
            center_frequency,
            bandwidth,
            usable_fraction,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::NonPositiveInput {
                name: "bandwidth",
                value: self.bandwidth,
            });
        }
        if !(self.usable_fraction > 0.0 && self.usable_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "usable fraction must lie in (0, 1], got {}",
                self.usable_fraction
            )));
        }
        Ok(())
    }

    pub fn usable_bandwidth(&self) -> f64 {
        self.bandwidth * self.usable_fraction
    }

    /// Half-open usable interval `[low, high)` in absolute frequency.
    pub fn usable_interval(&self) -> (f64, f64) {
        let half = self.usable_bandwidth() / 2.0;
        (self.center_frequency - half, self.center_frequency + half)
    }
}

/// One-tap equalizer: complex gain and a delay to remove.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerCoeffs {
    pub gain: Complex64,
    /// Delay in seconds that the equalizer advances the signal by.
    pub delay: f64,
}

impl EqualizerCoeffs {
    pub fn identity() -> Self {
        Self {
            gain: Complex64::new(1.0, 0.0),
            delay: 0.0,
        }
    }

    pub fn new(gain: Complex64, delay: f64) -> Result<Self> {
        let coeffs = Self { gain, delay };
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.norm() > 0.0 && self.gain.norm().is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "equalizer gain must be non-zero and finite, got {}",
                self.gain
            )));
        }
        if !self.delay.is_finite() {
            return Err(Error::InvalidConfig("equalizer delay must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn normalized_snapshot_is_unchanged() {
        let s = ChannelSnapshot::new(0.0, vec![Tap::new(0.0, c(1.0))]);
        assert_eq!(normalize_snapshot(&s, &NormalizeOptions::default()).unwrap(), s);
    }

    #[test]
    fn coincident_delays_merge() {
        let s = ChannelSnapshot::new(0.0, vec![Tap::new(5e-9, c(0.5)), Tap::new(5e-9, c(0.5))]);
        let n = normalize_snapshot(&s, &NormalizeOptions::default()).unwrap();
        assert_eq!(n.taps, vec![Tap::new(5e-9, c(1.0))]);
    }

    #[test]
    fn eleven_taps_exceed_default_limit() {
        let taps = (0..11).map(|k| Tap::new(k as f64 * 1e-9, c(1.0))).collect();
        let err = normalize_snapshot(&ChannelSnapshot::new(0.0, taps), &NormalizeOptions::default());
        assert!(matches!(err, Err(Error::TooManyTaps { count: 11, max: 10 })));
    }

    #[test]
    fn limit_is_configurable() {
        let taps = (0..11).map(|k| Tap::new(k as f64 * 1e-9, c(1.0))).collect();
        let opts = NormalizeOptions {
            max_active_taps: 16,
            ..Default::default()
        };
        assert_eq!(
            normalize_snapshot(&ChannelSnapshot::new(0.0, taps), &opts)
                .unwrap()
                .taps
                .len(),
            11
        );
    }

    #[test]
    fn cancelling_taps_are_dropped() {
        let s = ChannelSnapshot::new(
            0.0,
            vec![
                Tap::new(1e-9, c(1.0)),
                Tap::new(0.0, c(2.0)),
                Tap::new(1e-9, c(-1.0)),
            ],
        );
        let n = normalize_snapshot(&s, &NormalizeOptions::default()).unwrap();
        assert_eq!(n.taps, vec![Tap::new(0.0, c(2.0))]);
    }

    #[test]
    fn merge_tolerance_groups_nearby_delays() {
        let s = ChannelSnapshot::new(
            0.0,
            vec![
                Tap::new(0.0, c(1.0)),
                Tap::new(0.4e-9, c(1.0)),
                Tap::new(1.5e-9, c(1.0)),
            ],
        );
        let opts = NormalizeOptions {
            merge_tolerance: 1e-9,
            ..Default::default()
        };
        let n = normalize_snapshot(&s, &opts).unwrap();
        assert_eq!(n.taps, vec![Tap::new(0.0, c(2.0)), Tap::new(1.5e-9, c(1.0))]);
        assert_eq!(normalize_snapshot(&n, &opts).unwrap(), n);
    }

    #[test]
    fn negative_delay_is_rejected() {
        let s = ChannelSnapshot::new(0.0, vec![Tap::new(-1e-9, c(1.0))]);
        assert!(normalize_snapshot(&s, &NormalizeOptions::default()).is_err());
    }

    #[test]
    fn sequence_rejects_repeated_timestamps() {
        let s = ChannelSnapshot::two_tap(1e-7);
        assert!(matches!(
            SnapshotSequence::new(vec![s.clone(), s]),
            Err(Error::NonIncreasingTimestamps { index: 1 })
        ));
    }

    #[test]
    fn gap_fill_interpolates() {
        let mut fr = FrequencyResponse::new(0.0, 1.0, vec![c(1.0), c(0.0), c(0.0), c(4.0)]).unwrap();
        fr.present = Some(vec![true, false, false, true]);
        let filled = fr.fill_gaps_linear().unwrap();
        assert_eq!(filled.values, vec![c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert!(!filled.has_gaps());
    }

    #[test]
    fn indices_in_is_inclusive() {
        let fr = FrequencyResponse::new(-2.0, 0.5, vec![c(1.0); 9]).unwrap();
        assert_eq!(fr.indices_in(-1.0, 1.0), 2..7);
        assert_eq!(fr.indices_in(5.0, 6.0).len(), 0);
        assert_eq!(fr.indices_in(-10.0, -5.0).len(), 0);
    }

    #[test]
    fn subband_rejects_bad_fraction() {
        assert!(SubBand::new(0.0, 120e6, 0.0).is_err());
        assert!(SubBand::new(0.0, 120e6, 1.2).is_err());
        assert!(SubBand::new(0.0, -1.0, 0.5).is_err());
        let b = SubBand::new(1e9, 120e6, 0.5).unwrap();
        assert_eq!(b.usable_interval(), (1e9 - 30e6, 1e9 + 30e6));
    }
}
