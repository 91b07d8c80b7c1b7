//! Drives the same pipelines as the `otaemu` binary from an in-memory TOML
//! experiment: a stitched sweep, then emulation of a generated signal over a
//! synthetic drive.

use otaemu::cli::{emulate, generate_signal, sweep};
use otaemu::config::ExperimentConfig;

const EXPERIMENT: &str = r#"
[sweep]
center_hz = 500e6
step_hz = 100e3

[subbands]
total_bandwidth_hz = 648e6

[equalizer]
mode = "calibrate"

[tdl]
fractional_delay = { kind = "windowed-sinc" }
update_policy = { kind = "linear-crossfade", window = 1e-6 }

[trace]
kind = "synth"

[scenario]
num_snapshots = 11
duration = 100e-6

[emulate]
apply_chain = true
equalize = true

[signal]
kind = "noise"
samples = 24000
seed = 7
"#;

fn main() -> otaemu::Result<()> {
    let cfg = ExperimentConfig::from_toml(EXPERIMENT)?;
    cfg.validate()?;

    let report = sweep(&cfg)?;
    println!("{}", report.summary());
    for (piece, c) in report.pieces.iter().zip(&report.coeffs) {
        println!(
            "  band {:.0} MHz: delay {:.3} us, |g| {:.3}",
            piece.subband.center_frequency / 1e6,
            c.delay * 1e6,
            c.gain.norm()
        );
    }

    let x = generate_signal(&cfg.signal)?;
    let y = emulate(&cfg, &x)?;
    println!(
        "emulated {} samples into {}, energy ratio {:.3}",
        x.len(),
        y.len(),
        y.energy() / x.energy()
    );
    Ok(())
}
