//! Covers a 720 MHz channel with six 120 MHz SDR bands, emulates each band
//! separately and stitches the measured responses.

use otaemu::cli::estimate_tf;
use otaemu::subband::{plan_subbands, project_channel, stitch, StitchPiece};
use otaemu::tdl::{channel_frequency_response, convolve_snapshot, TdlConfig};
use otaemu::{ChannelSnapshot, Complex64, ComplexSignal, Tap};

fn main() -> otaemu::Result<()> {
    let center = 60e9;
    let plan = plan_subbands(center, 720e6, 120e6, 1.0)?;
    let channel = ChannelSnapshot::new(
        0.0,
        vec![
            Tap::new(0.0, Complex64::new(1.0, 0.0)),
            Tap::new(25e-9, Complex64::new(0.0, 0.4)),
            Tap::new(75e-9, Complex64::new(-0.2, 0.1)),
        ],
    );

    let mut impulse = vec![Complex64::new(0.0, 0.0); 1200];
    impulse[0] = Complex64::new(1.0, 0.0);
    let x = ComplexSignal::new(impulse, 120e6)?;

    let mut pieces = Vec::new();
    for band in &plan.subbands {
        let local = project_channel(&channel, band, center);
        let mut y = convolve_snapshot(&x, &local, &TdlConfig::default())?;
        y.samples.truncate(x.len());
        pieces.push(StitchPiece {
            subband: *band,
            response: estimate_tf(&x, &y)?,
        });
        println!(
            "band at {:+.0} MHz measured",
            (band.center_frequency - center) / 1e6
        );
    }

    let stitched = stitch(&pieces)?;
    let truth = channel_frequency_response(&channel, &stitched.shifted(-center).grid())?;
    let worst = stitched
        .values
        .iter()
        .zip(&truth.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!(
        "{} stitched points, max error vs closed form {worst:.2e}",
        stitched.len()
    );
    Ok(())
}
