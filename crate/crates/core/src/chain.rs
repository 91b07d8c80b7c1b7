//! Parametric model of the frequency-selective hardware chain between the two
//! test chambers: converter pass-band, connector ripple, front-end gain step
//! and the processing delay of the SDR.
//!
//! ```text
//! H(f) = base_gain · pass_shape(f) · ripple(f) · step(f) · e^{-j2π f · group_delay}
//! ```
//!
//! `pass_shape` is a rectangle with raised-cosine edges. Its transition band
//! occupies `1 / rolloff_exponent` of the half-width on either side of the
//! nominal edge, so an infinite exponent gives a hard rectangle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{Error, Result};
use crate::types::{ComplexSignal, FrequencyGrid, FrequencyResponse, SPEED_OF_LIGHT};

/// Magnitude floor outside the pass-band (−120 dB).
pub const STOPBAND_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Hz
    pub passband_center: f64,
    /// Hz
    pub passband_width: f64,
    pub rolloff_exponent: f64,
    /// Ripple amplitude in dB; the ripple swings ±this value, so the
    /// peak-to-peak excursion is twice it.
    pub ripple_amplitude_db: f64,
    /// Hz
    pub ripple_period: f64,
    /// Seconds
    pub group_delay: f64,
    /// Frequency at and above which the gain step applies, Hz.
    pub gain_step_frequency: f64,
    pub gain_step_db: f64,
    pub base_gain_db: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            passband_center: 500e6,
            passband_width: 1e9,
            rolloff_exponent: 10.0,
            ripple_amplitude_db: 1.5,
            ripple_period: 40e6,
            group_delay: 0.0,
            gain_step_frequency: 500e6,
            gain_step_db: 3.0,
            base_gain_db: 0.0,
        }
    }
}

impl ChainConfig {
    /// A chain with unit gain everywhere and no delay.
    pub fn flat() -> Self {
        Self {
            passband_center: 0.0,
            passband_width: f64::MAX,
            rolloff_exponent: f64::INFINITY,
            ripple_amplitude_db: 0.0,
            gain_step_db: 0.0,
            group_delay: 0.0,
            ..Self::default()
        }
    }

    /// Flat chain that only delays by `delay` seconds and scales by `gain_db`.
    pub fn pure_delay(delay: f64, gain_db: f64) -> Self {
        Self {
            group_delay: delay,
            base_gain_db: gain_db,
            ..Self::flat()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.passband_center,
            self.ripple_amplitude_db,
            self.gain_step_frequency,
            self.gain_step_db,
            self.base_gain_db,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("chain parameters must be finite".into()));
        }
        if !(self.passband_width > 0.0 && self.passband_width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "passband_width must be positive, got {}",
                self.passband_width
            )));
        }
        if !(self.ripple_period > 0.0 && self.ripple_period.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ripple_period must be positive, got {}",
                self.ripple_period
            )));
        }
        if !(self.group_delay >= 0.0 && self.group_delay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "group_delay must be non-negative, got {}",
                self.group_delay
            )));
        }
        if !(self.rolloff_exponent > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "rolloff_exponent must be positive, got {}",
                self.rolloff_exponent
            )));
        }
        Ok(())
    }

    fn pass_shape(&self, f: f64) -> f64 {
        let half = self.passband_width / 2.0;
        let x = (f - self.passband_center).abs();
        let beta = (1.0 / self.rolloff_exponent).clamp(0.0, 1.0);
        let flat_edge = (1.0 - beta) * half;
        let stop_edge = (1.0 + beta) * half;
        if x <= flat_edge {
            1.0
        } else if x >= stop_edge {
            STOPBAND_FLOOR
        } else {
            let t = (x - flat_edge) / (stop_edge - flat_edge);
            (0.5 * (1.0 + (PI * t).cos())).max(STOPBAND_FLOOR)
        }
    }

    /// Real, non-negative magnitude of the chain at `f`.
    pub fn magnitude(&self, f: f64) -> f64 {
        let ripple_db = self.ripple_amplitude_db * (2.0 * PI * f / self.ripple_period).sin();
        let step_db = if f >= self.gain_step_frequency {
            self.gain_step_db
        } else {
            0.0
        };
        db_to_amplitude(self.base_gain_db + ripple_db + step_db) * self.pass_shape(f)
    }

    /// Complex response at absolute frequency `f`.
    pub fn response_at(&self, f: f64) -> Complex64 {
        Complex64::from_polar(self.magnitude(f), -2.0 * PI * f * self.group_delay)
    }
}

pub(crate) fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Evaluates the chain on `grid`.
pub fn chain_response(config: &ChainConfig, grid: &FrequencyGrid) -> Result<FrequencyResponse> {
    grid.validate()?;
    config.validate()?;
    let values = grid.frequencies().map(|f| config.response_at(f)).collect();
    FrequencyResponse::from_grid(grid, values)
}

/// Passes `signal` through the chain. The chain is evaluated at
/// `signal.center_frequency + f` for each baseband frequency `f`; the output
/// has the input's length.
pub fn apply_chain(signal: &ComplexSignal, config: &ChainConfig) -> Result<ComplexSignal> {
    signal.validate()?;
    config.validate()?;
    let extra = (config.group_delay * signal.sample_rate).ceil() as usize;
    let center = signal.center_frequency;
    let samples = dft::filter_padded(&signal.samples, signal.sample_rate, extra, |f| {
        config.response_at(center + f)
    });
    Ok(ComplexSignal {
        samples,
        ..signal.clone()
    })
}

/// Far-field boundary `2·D²/λ` for an aperture of diagonal `D` metres.
pub fn rayleigh_distance(aperture_diagonal: f64, frequency: f64) -> Result<f64> {
    if !(aperture_diagonal > 0.0 && aperture_diagonal.is_finite()) {
        return Err(Error::NonPositiveInput {
            name: "aperture_diagonal",
            value: aperture_diagonal,
        });
    }
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::NonPositiveInput {
            name: "frequency",
            value: frequency,
        });
    }
    let wavelength = SPEED_OF_LIGHT / frequency;
    Ok(2.0 * aperture_diagonal * aperture_diagonal / wavelength)
}
