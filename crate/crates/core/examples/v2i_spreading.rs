//! Synthesizes a 60 GHz vehicle-to-infrastructure drive and computes its
//! delay-Doppler spreading function.

use otaemu::analysis::{amplitude_db, spreading_function, time_variant_cir, total_power_trace};
use otaemu::playback::{synth_v2i_trace, ScenarioConfig};
use otaemu::window::Window;
use otaemu::FrequencyGrid;

fn main() -> otaemu::Result<()> {
    let scenario = ScenarioConfig::default();
    let trace = synth_v2i_trace(&scenario)?;
    println!(
        "{} snapshots every {:.1} us, kinematic Doppler bound {:.1} Hz",
        trace.len(),
        scenario.snapshot_spacing() * 1e6,
        scenario.max_doppler()
    );

    let power = total_power_trace(&trace);
    let (first, last) = (power[0], power[power.len() - 1]);
    println!(
        "power {:.2} dB at t={:.4} s, {:.2} dB at t={:.4} s",
        first.1, first.0, last.1, last.0
    );

    let grid = FrequencyGrid::centered(0.0, 120e6, 256)?;
    let cirs = time_variant_cir(&trace, &grid, Window::Rectangular)?;
    let s = spreading_function(&cirs, Window::Rectangular)?;
    let (tau, nu, mag) = s.argmax();
    println!(
        "peak at {:.1} ns, {:.1} Hz, {:.1} dB",
        tau * 1e9,
        nu,
        amplitude_db(mag)
    );
    println!("Doppler resolution {:.2} Hz", s.doppler_resolution());

    // Strongest Doppler per delay bin for the first few bins.
    for (d, delay) in s.delays.iter().enumerate().take(8) {
        let (row, v) = s
            .values
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r[d].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        println!(
            "  {:>6.1} ns  {:>8.1} Hz  {:>6.1} dB",
            delay * 1e9,
            s.dopplers[row],
            amplitude_db(v)
        );
    }
    Ok(())
}
