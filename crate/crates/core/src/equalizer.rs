//! One-tap equalization: a complex gain and a delay that flatten a nearly
//! frequency-flat hardware chain before emulation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::tf_to_cir;
use crate::dft;
use crate::error::{Error, Result};
use crate::subband::StitchPiece;
use crate::types::{ComplexSignal, EqualizerCoeffs, FrequencyResponse, ImpulseResponse};
use crate::window::Window;

/// Minimum number of in-band grid points for a calibration.
pub const MIN_CALIBRATION_POINTS: usize = 8;

/// Average used for the gain magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanKind {
    /// Arithmetic mean of linear magnitude.
    #[default]
    Arithmetic,
    /// Geometric mean of linear magnitude (mean in dB).
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayEstimator {
    /// Least-squares slope of the unwrapped phase.
    #[default]
    PhaseSlope,
    /// Peak of the in-band impulse response.
    CirPeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CalibrationOptions {
    pub mean: MeanKind,
    pub delay: DelayEstimator,
}

/// Calibrates with the arithmetic mean and phase-slope delay estimate.
pub fn calibrate_one_tap(measured: &FrequencyResponse, usable_band: (f64, f64)) -> Result<EqualizerCoeffs> {
    calibrate_one_tap_with(measured, usable_band, &CalibrationOptions::default())
}

/// Fits the one-tap equalizer over the bins of `measured` inside
/// `usable_band = (low, high)`, both ends inclusive.
///
/// The gain magnitude is the inverse mean magnitude. With the phase-slope
/// estimator the unwrapped phase is fitted as `φ(f) ≈ φ0 − 2π f τ`; the
/// equalizer removes `τ` and `φ0`.
pub fn calibrate_one_tap_with(
    measured: &FrequencyResponse,
    usable_band: (f64, f64),
    options: &CalibrationOptions,
) -> Result<EqualizerCoeffs> {
    let range = measured.indices_in(usable_band.0, usable_band.1);
    if range.len() < MIN_CALIBRATION_POINTS {
        return Err(Error::BandTooNarrow {
            points: range.len(),
            required: MIN_CALIBRATION_POINTS,
        });
    }
    if range.clone().any(|k| !measured.is_present(k)) {
        return Err(Error::GappedInput);
    }
    let freqs: Vec<f64> = range.clone().map(|k| measured.frequency(k)).collect();
    let values = &measured.values[range];

    let mean_mag = match options.mean {
        MeanKind::Arithmetic => values.iter().map(|v| v.norm()).sum::<f64>() / values.len() as f64,
        MeanKind::Geometric => {
            if values.iter().any(|v| v.norm() == 0.0) {
                0.0
            } else {
                (values.iter().map(|v| v.norm().ln()).sum::<f64>() / values.len() as f64).exp()
            }
        }
    };
    if !(mean_mag > 0.0) {
        return Err(Error::ZeroResponse);
    }

    let (delay, phase0) = match options.delay {
        DelayEstimator::PhaseSlope => {
            let phase = unwrap_phase(&values.iter().map(|v| v.arg()).collect::<Vec<_>>());
            let (slope, intercept) = fit_line(&freqs, &phase);
            (-slope / (2.0 * PI), intercept)
        }
        DelayEstimator::CirPeak => {
            let band = FrequencyResponse::new(freqs[0], measured.frequency_step, values.to_vec())?;
            let cir = tf_to_cir(&band, Window::Rectangular)?;
            let delay = cir.delay(cir.peak_index());
            let aligned: Complex64 = freqs
                .iter()
                .zip(values)
                .map(|(f, v)| v * Complex64::from_polar(1.0, 2.0 * PI * f * delay))
                .sum();
            (delay, aligned.arg())
        }
    };
    EqualizerCoeffs::new(Complex64::from_polar(1.0 / mean_mag, -phase0), delay)
}

/// Cumulative ±2π correction between consecutive samples.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let d = p - phase[i - 1];
            if d.abs() > PI {
                offset -= 2.0 * PI * (d / (2.0 * PI)).round();
            }
        }
        out.push(p + offset);
    }
    out
}

/// Least-squares line `y = slope·x + intercept`, fitted around the mean of `x`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Something a one-tap equalizer can be applied to.
pub trait Equalize: Sized {
    fn equalize(&self, coeffs: &EqualizerCoeffs) -> Self;
}

impl Equalize for FrequencyResponse {
    /// `H_eq(f) = gain · e^{+j2π f · delay} · H(f)`
    fn equalize(&self, coeffs: &EqualizerCoeffs) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                coeffs.gain * Complex64::from_polar(1.0, 2.0 * PI * self.frequency(k) * coeffs.delay) * v
            })
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }
}

impl Equalize for ComplexSignal {
    /// Scales by the gain and advances by the delay, in the frequency domain
    /// with the same zero-padding as the chain model.
    fn equalize(&self, coeffs: &EqualizerCoeffs) -> Self {
        let extra = (coeffs.delay.abs() * self.sample_rate).ceil() as usize;
        let center = self.center_frequency;
        let samples = dft::filter_padded(&self.samples, self.sample_rate, extra, |f| {
            coeffs.gain * Complex64::from_polar(1.0, 2.0 * PI * (center + f) * coeffs.delay)
        });
        Self {
            samples,
            ..self.clone()
        }
    }
}

pub fn apply_equalizer<T: Equalize>(target: &T, coeffs: &EqualizerCoeffs) -> T {
    target.equalize(coeffs)
}

/// Calibrates every piece independently over its usable interval.
pub fn calibrate_per_subband(
    pieces: &[StitchPiece],
    options: &CalibrationOptions,
) -> Result<Vec<EqualizerCoeffs>> {
    pieces
        .iter()
        .map(|p| {
            let half = p.subband.usable_bandwidth() / 2.0;
            // usable interval is half-open
            let high = half - 1e-6 * p.response.frequency_step;
            calibrate_one_tap_with(&p.response, (-half, high), options)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicRangeOptions {
    /// Width of the window around the peak excluded from the sidelobe search,
    /// in delay bins.
    pub guard_bins: usize,
    /// Value returned when nothing lies outside the guard window.
    pub cap_db: f64,
}

impl Default for DynamicRangeOptions {
    fn default() -> Self {
        Self {
            guard_bins: 3,
            cap_db: 200.0,
        }
    }
}

/// Peak-to-largest-sidelobe ratio of an impulse response, in dB.
pub fn dynamic_range_metric(cir: &ImpulseResponse, options: &DynamicRangeOptions) -> Result<f64> {
    let mags: Vec<f64> = cir.values.iter().map(|v| v.norm()).collect();
    if mags.iter().all(|&m| m == mags[0]) {
        return Err(Error::DegenerateCir);
    }
    let peak = cir.peak_index();
    let half = options.guard_bins / 2;
    let off_peak = mags
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(peak) > half)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);
    if off_peak == 0.0 {
        return Ok(options.cap_db);
    }
    Ok((20.0 * (mags[peak] / off_peak).log10()).min(options.cap_db))
}
