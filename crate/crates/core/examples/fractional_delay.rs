//! Compares nearest-sample and windowed-sinc tap delays on a tone, with a
//! crossfaded switch between two channel snapshots.

use std::f64::consts::PI;

use otaemu::tdl::{emulate_time_variant, FractionalDelay, TdlConfig, UpdatePolicy};
use otaemu::{ChannelSnapshot, Complex64, ComplexSignal, SnapshotSequence, Tap};

const FS: f64 = 120e6;

fn main() -> otaemu::Result<()> {
    let f0 = 7.3e6;
    let x: Vec<Complex64> = (0..4000)
        .map(|n| Complex64::from_polar(1.0, 2.0 * PI * f0 * n as f64 / FS))
        .collect();
    let x = ComplexSignal::new(x, FS)?;

    let delay = 12.37 / FS;
    let seq = SnapshotSequence::new(vec![
        ChannelSnapshot::new(0.0, vec![Tap::new(delay, Complex64::new(1.0, 0.0))]),
        ChannelSnapshot::new(2000.0 / FS, vec![Tap::new(2.0 * delay, Complex64::new(0.0, 1.0))]),
    ])?;

    for (name, fractional_delay) in [
        ("nearest sample", FractionalDelay::NearestSample),
        ("windowed sinc", FractionalDelay::windowed_sinc()),
    ] {
        let cfg = TdlConfig {
            fractional_delay,
            update_policy: UpdatePolicy::LinearCrossfade { window: 200.0 / FS },
            ..TdlConfig::default()
        };
        let y = emulate_time_variant(&x, &seq, &cfg)?;
        // Error against the ideal delayed tone well inside the first snapshot.
        let err = (200..1800)
            .map(|n| {
                let ideal = Complex64::from_polar(1.0, 2.0 * PI * f0 * (n as f64 / FS - delay));
                (y.samples[n] - ideal).norm()
            })
            .fold(0.0, f64::max);
        println!("{name:>15}: {} output samples, max error {err:.2e}", y.len());
    }
    Ok(())
}
