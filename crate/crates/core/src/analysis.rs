//! Transforms and metrics over frequency responses, impulse responses and
//! snapshot sequences.
//!
//! Normalization conventions:
//! - TF → CIR is the inverse DFT with `1/N`, CIR → TF the unscaled forward
//!   DFT. A flat unit TF maps to a unit impulse and
//!   `Σ|h|² = Σ|H|² / N`.
//! - The Doppler transform of the spreading function is unitary (`1/√M`), so
//!   the map holds the same energy as the time-variant CIR it came from.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::dft;
use crate::error::{Error, Result};
use crate::tdl::channel_frequency_response;
use crate::types::{FrequencyGrid, FrequencyResponse, ImpulseResponse, SnapshotSequence};
use crate::window::Window;

/// Impulse response of `tf` via the windowed inverse DFT. The window is
/// scaled to unit coherent gain. Bin `n` sits at delay `n / (N·Δf)`.
pub fn tf_to_cir(tf: &FrequencyResponse, window: Window) -> Result<ImpulseResponse> {
    if tf.has_gaps() {
        return Err(Error::GappedInput);
    }
    tf.grid().validate()?;
    let n = tf.len();
    let w = window.coefficients(n);
    let weighted: Vec<Complex64> = tf.values.iter().zip(&w).map(|(v, w)| v * *w).collect();
    let mut cir = ImpulseResponse::new(1.0 / (n as f64 * tf.frequency_step), dft::inverse(&weighted))?;
    cir.start_frequency = tf.start_frequency;
    Ok(cir)
}

/// Inverse of [`tf_to_cir`] with a rectangular window.
pub fn cir_to_tf(cir: &ImpulseResponse) -> Result<FrequencyResponse> {
    let n = cir.len();
    let step = 1.0 / (n as f64 * cir.delay_step);
    let mut values = dft::forward(&cir.values);
    if cir.delay_offset != 0.0 {
        for (k, v) in values.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -2.0 * PI * k as f64 * step * cir.delay_offset);
        }
    }
    FrequencyResponse::new(cir.start_frequency, step, values)
}

/// Frequency responses of every snapshot on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVariantResponse {
    pub timestamps: Vec<f64>,
    pub grid: FrequencyGrid,
    pub responses: Vec<FrequencyResponse>,
}

pub fn time_variant_tf(seq: &SnapshotSequence, grid: &FrequencyGrid) -> Result<TimeVariantResponse> {
    let responses = seq
        .snapshots
        .iter()
        .map(|s| channel_frequency_response(s, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeVariantResponse {
        timestamps: seq.timestamps(),
        grid: *grid,
        responses,
    })
}

pub fn time_variant_cir(
    seq: &SnapshotSequence,
    grid: &FrequencyGrid,
    window: Window,
) -> Result<Vec<(f64, ImpulseResponse)>> {
    time_variant_tf(seq, grid)?
        .responses
        .iter()
        .zip(seq.snapshots.iter())
        .map(|(tf, s)| Ok((s.timestamp, tf_to_cir(tf, window)?)))
        .collect()
}

/// Delay-Doppler spreading function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingFunction {
    /// Delay axis, seconds.
    pub delays: Vec<f64>,
    /// Doppler axis, Hz, ascending from `-1/(2Δt)`.
    pub dopplers: Vec<f64>,
    /// `values[doppler][delay]`.
    pub values: Vec<Vec<Complex64>>,
    pub snapshot_spacing: f64,
}

impl SpreadingFunction {
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.dopplers.len() as f64 * self.snapshot_spacing)
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    /// `(delay, doppler, magnitude)` of the largest entry.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, -1.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.norm() > best.2 {
                    best = (i, j, v.norm());
                }
            }
        }
        (self.delays[best.1], self.dopplers[best.0], best.2)
    }

    /// Matrix CSV: header row of delays in ns, then one row per Doppler bin
    /// starting with the Doppler in Hz, magnitudes in dB (20·log10).
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "doppler_hz\\delay_ns")?;
        for d in &self.delays {
            write!(out, ",{}", delay_ns(*d))?;
        }
        writeln!(out)?;
        for (nu, row) in self.dopplers.iter().zip(&self.values) {
            write!(out, "{nu}")?;
            for v in row {
                write!(out, ",{}", amplitude_db(v.norm()))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Delay in ns rounded to the picosecond, for axis labels.
pub fn delay_ns(delay: f64) -> f64 {
    (delay * 1e12).round() / 1e3
}

/// 20·log10 of a linear amplitude.
pub fn amplitude_db(a: f64) -> f64 {
    20.0 * a.log10()
}

/// 10·log10 of a linear power.
pub fn power_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// Doppler DFT over uniformly spaced impulse responses sharing one delay
/// grid: `S(τ, ν) = (1/√M) Σ_m w_m h(t_m, τ) e^{-j2πν mΔt}`.
pub fn spreading_function(
    cirs: &[(f64, ImpulseResponse)],
    doppler_window: Window,
) -> Result<SpreadingFunction> {
    let m = cirs.len();
    if m < 2 {
        return Err(Error::NonUniformSampling { index: m });
    }
    let spacing = (cirs[m - 1].0 - cirs[0].0) / (m - 1) as f64;
    if !(spacing > 0.0) {
        return Err(Error::NonUniformSampling { index: 1 });
    }
    for (i, w) in cirs.windows(2).enumerate() {
        if ((w[1].0 - w[0].0) - spacing).abs() > 1e-6 * spacing {
            return Err(Error::NonUniformSampling { index: i + 1 });
        }
    }
    let reference = &cirs[0].1;
    for (_, c) in cirs {
        if c.len() != reference.len()
            || (c.delay_step - reference.delay_step).abs() > 1e-12 * reference.delay_step
            || c.delay_offset != reference.delay_offset
        {
            return Err(Error::GridMismatch(
                "impulse responses use different delay grids".into(),
            ));
        }
    }

    let taper = doppler_window.coefficients(m);
    let half = m / 2;
    let dopplers: Vec<f64> = (0..m)
        .map(|k| (k as f64 - half as f64) / (m as f64 * spacing))
        .collect();
    let mut values = vec![vec![Complex64::new(0.0, 0.0); reference.len()]; m];
    for tau in 0..reference.len() {
        let series: Vec<Complex64> = cirs
            .iter()
            .zip(&taper)
            .map(|((_, c), w)| c.values[tau] * *w)
            .collect();
        let spectrum = dft::forward_unitary(&series);
        for (k, row) in values.iter_mut().enumerate() {
            row[tau] = spectrum[(k + m - half) % m];
        }
    }
    Ok(SpreadingFunction {
        delays: (0..reference.len()).map(|n| reference.delay(n)).collect(),
        dopplers,
        values,
        snapshot_spacing: spacing,
    })
}

/// Total power per snapshot, `10·log10(Σ|a_k|²)`.
pub fn total_power_trace(seq: &SnapshotSequence) -> Vec<(f64, f64)> {
    seq.snapshots
        .iter()
        .map(|s| (s.timestamp, power_db(s.power())))
        .collect()
}

/// Total power per impulse response, `10·log10(Σ|h|²)`; a unit impulse reads
/// 0 dB regardless of the delay step.
pub fn total_power_trace_cir(cirs: &[(f64, ImpulseResponse)]) -> Vec<(f64, f64)> {
    cirs.iter().map(|(t, c)| (*t, power_db(c.energy()))).collect()
}
