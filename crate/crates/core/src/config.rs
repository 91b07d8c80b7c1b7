//! Experiment configuration: one TOML document describing a full run.
//!
//! Every section is optional and falls back to its defaults.
//!
//! ```toml
//! [chain]              # hardware chain, see ChainConfig
//! ripple_amplitude_db = 1.5
//!
//! [sweep]              # one SDR band swept across the chain
//! center_hz = 300e6
//! bandwidth_hz = 120e6
//! step_hz = 100e3     # phase-slope delay fits need step < 1 / delay
//! usable_fraction = 0.9
//!
//! [subbands]           # optional: tile a wider band with sweep-sized bands
//! total_bandwidth_hz = 648e6
//!
//! [equalizer]
//! mode = "calibrate"   # "none", "calibrate" or "fixed"
//!
//! [tdl]
//! fractional_delay = { kind = "windowed-sinc", order = 64, beta = 8.0 }
//!
//! [trace]
//! kind = "two-tap"     # "identity", "two-tap", "file" or "synth"
//! echo_delay_s = 500e-9
//!
//! [emulate]
//! apply_chain = false
//!
//! [analysis]
//! bandwidth_hz = 120e6
//! points = 256
//!
//! [scenario]           # synthetic V2I trace, see ScenarioConfig
//! speed = 14.0
//!
//! [signal]             # generated test signal
//! kind = "impulse-train"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::equalizer::{CalibrationOptions, DelayEstimator, MeanKind};
use crate::error::{Error, Result};
use crate::playback::ScenarioConfig;
use crate::subband::{plan_subbands, SubBandPlan, DEFAULT_USABLE_FRACTION};
use crate::tdl::TdlConfig;
use crate::types::{EqualizerCoeffs, FrequencyGrid, SubBand};
use crate::window::Window;
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainConfig,
    pub sweep: SweepConfig,
    pub subbands: Option<SubbandConfig>,
    pub equalizer: EqualizerConfig,
    pub tdl: TdlConfig,
    pub trace: TraceSource,
    pub emulate: EmulateConfig,
    pub analysis: AnalysisConfig,
    pub scenario: ScenarioConfig,
    pub signal: SignalConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub center_hz: f64,
    /// Instantaneous SDR bandwidth.
    pub bandwidth_hz: f64,
    pub step_hz: f64,
    pub usable_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            center_hz: 300e6,
            bandwidth_hz: 120e6,
            step_hz: 100e3,
            usable_fraction: DEFAULT_USABLE_FRACTION,
        }
    }
}

impl SweepConfig {
    pub fn points(&self) -> usize {
        (self.bandwidth_hz / self.step_hz).round() as usize
    }

    /// Baseband grid of one band, `[-B/2, B/2)`.
    pub fn baseband_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(-self.bandwidth_hz / 2.0, self.step_hz, self.points())
    }

    pub fn subband(&self) -> Result<SubBand> {
        SubBand::new(self.center_hz, self.bandwidth_hz, self.usable_fraction)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sweep.bandwidth_hz", self.bandwidth_hz),
            ("sweep.step_hz", self.step_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.points() < 2 {
            return Err(Error::InvalidConfig(
                "sweep must contain at least 2 points".into(),
            ));
        }
        self.subband()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubbandConfig {
    /// Width tiled by sweep-sized bands centered on `sweep.center_hz`.
    pub total_bandwidth_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualizerMode {
    #[default]
    None,
    /// Fit gain and delay on the simulated chain.
    Calibrate,
    /// Use the configured coefficients.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizerConfig {
    pub mode: EqualizerMode,
    pub gain_re: f64,
    pub gain_im: f64,
    pub delay_s: f64,
    pub mean: MeanKind,
    pub estimator: DelayEstimator,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self {
            mode: EqualizerMode::None,
            gain_re: 1.0,
            gain_im: 0.0,
            delay_s: 0.0,
            mean: MeanKind::Arithmetic,
            estimator: DelayEstimator::PhaseSlope,
        }
    }
}

impl EqualizerConfig {
    pub fn fixed_coeffs(&self) -> Result<EqualizerCoeffs> {
        EqualizerCoeffs::new(Complex64::new(self.gain_re, self.gain_im), self.delay_s)
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions {
            mean: self.mean,
            delay: self.estimator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceSource {
    /// A single unit tap at zero delay.
    #[default]
    Identity,
    /// `δ(τ) + δ(τ − echo_delay_s)`.
    TwoTap { echo_delay_s: f64 },
    /// Trace file, relative paths resolved against the config file.
    File { path: PathBuf },
    /// Synthetic V2I trace from `[scenario]`.
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmulateConfig {
    /// Filter the input through `[chain]` first.
    pub apply_chain: bool,
    /// Apply the `[equalizer]` after the chain.
    pub equalize: bool,
    /// Move the signal start to the first snapshot timestamp.
    pub align_to_trace: bool,
}

impl Default for EmulateConfig {
    fn default() -> Self {
        Self {
            apply_chain: false,
            equalize: false,
            align_to_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Baseband analysis bandwidth.
    pub bandwidth_hz: f64,
    pub points: usize,
    /// Taper applied before TF to CIR transforms.
    pub window: Window,
    /// Taper applied across snapshots for the spreading function.
    pub doppler_window: Window,
    /// Snapshot used by the `tf` and `cir` modes on a trace.
    pub snapshot: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 120e6,
            points: 256,
            window: Window::Rectangular,
            doppler_window: Window::Rectangular,
            snapshot: 0,
        }
    }
}

impl AnalysisConfig {
    /// `points` bins over `[-B/2, B/2)`.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::InvalidConfig(
                "analysis.bandwidth_hz must be positive".into(),
            ));
        }
        FrequencyGrid::new(
            -self.bandwidth_hz / 2.0,
            self.bandwidth_hz / self.points as f64,
            self.points,
        )
        .map_err(|e| Error::InvalidConfig(format!("analysis grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// Unit impulses every `period` samples.
    #[default]
    ImpulseTrain,
    /// Complex white Gaussian noise of unit power, seeded.
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub kind: SignalKind,
    pub sample_rate_hz: f64,
    pub center_hz: f64,
    pub samples: usize,
    pub period: usize,
    pub start_s: f64,
    pub seed: u64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            kind: SignalKind::ImpulseTrain,
            sample_rate_hz: 120e6,
            center_hz: 0.0,
            samples: 4096,
            period: 1024,
            start_s: 0.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads and validates a config file. Relative trace paths are resolved
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let TraceSource::File { path: trace } = &mut cfg.trace {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Checks every section; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        fn tag(section: &'static str) -> impl Fn(Error) -> Error {
            move |e| Error::InvalidConfig(format!("[{section}] {e}"))
        }
        self.chain.validate().map_err(tag("chain"))?;
        self.sweep.validate().map_err(tag("sweep"))?;
        self.subband_plan().map_err(tag("subbands"))?;
        if self.equalizer.mode == EqualizerMode::Fixed {
            self.equalizer.fixed_coeffs().map_err(tag("equalizer"))?;
        }
        self.tdl.validate().map_err(tag("tdl"))?;
        if let TraceSource::TwoTap { echo_delay_s } = self.trace {
            if !(echo_delay_s > 0.0 && echo_delay_s.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "[trace] echo_delay_s must be positive, got {echo_delay_s}"
                )));
            }
        }
        self.analysis.grid().map_err(tag("analysis"))?;
        if self.analysis.points < 2 {
            return Err(Error::InvalidConfig(
                "[analysis] points must be at least 2".into(),
            ));
        }
        self.scenario.validate().map_err(tag("scenario"))?;
        let s = &self.signal;
        if !(s.sample_rate_hz > 0.0 && s.sample_rate_hz.is_finite()) || s.samples == 0 || s.period == 0 {
            return Err(Error::InvalidConfig(
                "[signal] sample_rate_hz, samples and period must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Sub-band plan, or `None` for a single-band sweep.
    pub fn subband_plan(&self) -> Result<Option<SubBandPlan>> {
        self.subbands
            .map(|sb| {
                plan_subbands(
                    self.sweep.center_hz,
                    sb.total_bandwidth_hz,
                    self.sweep.bandwidth_hz,
                    self.sweep.usable_fraction,
                )
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn sections_parse() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [chain]
            group_delay = 2.2e-6
            [subbands]
            total_bandwidth_hz = 720e6
            [sweep]
            usable_fraction = 1.0
            [equalizer]
            mode = "calibrate"
            mean = "geometric"
            [tdl]
            fractional_delay = { kind = "windowed-sinc", order = 64, beta = 8.0 }
            update_policy = { kind = "linear-crossfade", window = 1e-6 }
            [trace]
            kind = "two-tap"
            echo_delay_s = 500e-9
            [analysis]
            window = { kind = "kaiser", beta = 6.0 }
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.chain.group_delay, 2.2e-6);
        assert_eq!(cfg.subband_plan().unwrap().unwrap().len(), 6);
        assert_eq!(cfg.trace, TraceSource::TwoTap { echo_delay_s: 500e-9 });
        assert_eq!(cfg.equalizer.calibration_options().mean, MeanKind::Geometric);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig {
            trace: TraceSource::File {
                path: "a/b.trace".into(),
            },
            subbands: Some(SubbandConfig {
                total_bandwidth_hz: 1e9,
            }),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn schema_errors() {
        for bad in [
            "[chain]\nunknown = 1",
            "[sweep]\nstep_hz = -1.0",
            "[trace]\nkind = \"two-tap\"\necho_delay_s = 0.0",
            "[equalizer]\nmean = \"median\"",
            "[tdl]\nmax_active_taps = 0",
            "[scenario]\nnum_snapshots = 1",
            "nonsense",
        ] {
            let r = ExperimentConfig::from_toml(bad).and_then(|c| c.validate());
            assert!(matches!(r, Err(Error::InvalidConfig(_))), "{bad}: {r:?}");
        }
    }
}
