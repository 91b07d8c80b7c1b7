//! Sweeps the hardware chain over one SDR band and fits a one-tap equalizer.

use otaemu::chain::{chain_response, ChainConfig};
use otaemu::equalizer::{apply_equalizer, calibrate_one_tap};
use otaemu::{FrequencyGrid, SubBand};

fn main() -> otaemu::Result<()> {
    let chain = ChainConfig {
        group_delay: 2.2e-6,
        ..ChainConfig::default()
    };
    let band = SubBand::new(300e6, 120e6, 0.9)?;
    // 100 kHz steps keep the phase slope unambiguous for microsecond delays.
    let grid = FrequencyGrid::centered(band.center_frequency, band.bandwidth, 1200)?;
    let measured = chain_response(&chain, &grid)?;

    let usable = band.usable_interval();
    let range = measured.indices_in(usable.0, usable.1);
    let coeffs = calibrate_one_tap(&measured, usable)?;
    let equalized = apply_equalizer(&measured, &coeffs);

    println!(
        "usable band      {:.1} .. {:.1} MHz",
        usable.0 / 1e6,
        usable.1 / 1e6
    );
    println!(
        "raw p-p          {:.3} dB",
        measured.peak_to_peak_db(range.clone())
    );
    println!(
        "equalized p-p    {:.3} dB",
        equalized.peak_to_peak_db(range.clone())
    );
    let phase_span = |r: &otaemu::FrequencyResponse| {
        let p = otaemu::equalizer::unwrap_phase(
            &r.values[range.clone()]
                .iter()
                .map(|v| v.arg())
                .collect::<Vec<_>>(),
        );
        p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min)
    };
    println!("raw phase span   {:.1} rad", phase_span(&measured));
    println!("residual phase   {:.2e} rad", phase_span(&equalized));
    println!("fitted delay     {:.4} us", coeffs.delay * 1e6);
    println!(
        "gain             {:.4} @ {:.3} rad",
        coeffs.gain.norm(),
        coeffs.gain.arg()
    );

    let far = otaemu::chain::rayleigh_distance(0.3, 60e9)?;
    println!("far field for a 30 cm aperture at 60 GHz: {far:.1} m");
    Ok(())
}
