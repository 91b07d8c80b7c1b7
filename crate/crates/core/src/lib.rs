//! Software millimetre-wave over-the-air channel-emulation testbed.
//!
//! The crate models the chain a device signal crosses in an over-the-air
//! emulation setup (down-conversion, baseband tapped-delay-line emulation,
//! up-conversion), and provides the tools to characterize it:
//!
//! - [`chain`]: parametric hardware-chain response and far-field sizing.
//! - [`tdl`]: time-variant tapped-delay-line emulator.
//! - [`subband`]: splitting a wide band into SDR-sized sub-bands and stitching
//!   their responses back together.
//! - [`equalizer`]: one-tap (gain + delay) calibration.
//! - [`analysis`]: TF/CIR transforms, time-variant responses, delay-Doppler
//!   spreading function and power traces.
//! - [`playback`]: snapshot trace files, sparsification and a synthetic
//!   vehicle-to-infrastructure scenario.
//! - [`config`] and [`cli`]: experiment configuration and the command
//!   pipelines behind the `otaemu` binary.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chain;
pub mod cli;
pub mod config;
pub mod dft;
pub mod equalizer;
pub mod error;
pub mod playback;
pub mod signal_io;
pub mod subband;
pub mod tdl;
pub mod types;
pub mod window;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use types::*;
