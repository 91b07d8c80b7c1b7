//! Pushes an impulse through a static two-tap channel and looks at the
//! resulting frequency response and impulse response.

use otaemu::analysis::{amplitude_db, tf_to_cir};
use otaemu::cli::estimate_tf;
use otaemu::tdl::{convolve_snapshot, TdlConfig};
use otaemu::window::Window;
use otaemu::{ChannelSnapshot, Complex64, ComplexSignal};

const FS: f64 = 120e6;
const N: usize = 2400;

fn main() -> otaemu::Result<()> {
    let mut samples = vec![Complex64::new(0.0, 0.0); N];
    samples[0] = Complex64::new(1.0, 0.0);
    let x = ComplexSignal::new(samples, FS)?;

    let channel = ChannelSnapshot::two_tap(500e-9);
    let mut y = convolve_snapshot(&x, &channel, &TdlConfig::default())?;
    y.samples.truncate(N);

    let tf = estimate_tf(&x, &y)?;
    println!("frequency_mhz  |H| (dB)");
    for k in (0..tf.len()).step_by(tf.len() / 24) {
        println!(
            "{:>12.2}  {:>8.2}",
            tf.frequency(k) / 1e6,
            amplitude_db(tf.values[k].norm())
        );
    }

    let cir = tf_to_cir(&tf, Window::Rectangular)?;
    let mut lobes: Vec<(f64, f64)> = cir
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.5)
        .map(|(n, v)| (cir.delay(n) * 1e9, v.norm()))
        .collect();
    lobes.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (ns, mag) in lobes {
        println!("lobe at {ns:.2} ns, |h| = {mag:.3}");
    }
    Ok(())
}
