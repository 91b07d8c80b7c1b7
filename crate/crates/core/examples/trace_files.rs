//! Sparsifies measured impulse responses into a tap trace, writes it in both
//! file formats and reads it back.

use otaemu::analysis::tf_to_cir;
use otaemu::playback::{load_trace, render_cir, save_trace, sparsify, TraceFormat};
use otaemu::tdl::channel_frequency_response;
use otaemu::window::Window;
use otaemu::{ChannelSnapshot, Complex64, FrequencyGrid, SnapshotSequence, Tap};

fn main() -> otaemu::Result<()> {
    let grid = FrequencyGrid::centered(0.0, 120e6, 128)?;
    let step = 1.0 / grid.span();

    let mut snapshots = Vec::new();
    for m in 0..5 {
        let t = m as f64 * 1e-3;
        let truth = ChannelSnapshot::new(
            t,
            vec![
                Tap::new(0.0, Complex64::from_polar(1.0, 0.3 * m as f64)),
                Tap::new((3 + m) as f64 * step, Complex64::new(0.0, -0.5)),
                Tap::new(20.0 * step, Complex64::new(0.1, 0.05)),
            ],
        );
        let cir = tf_to_cir(&channel_frequency_response(&truth, &grid)?, Window::Rectangular)?;
        snapshots.push(sparsify(&cir, 3, t)?);
    }
    let seq = SnapshotSequence::new(snapshots)?
        .with_metadata("source", "trace_files example")
        .with_metadata("note", "commas, equals=signs and\nnewlines survive");

    let dir = tempfile::tempdir()?;
    for (name, format) in [
        ("trace.txt", TraceFormat::Text),
        ("trace.chem", TraceFormat::Binary),
    ] {
        let path = dir.path().join(name);
        save_trace(&seq, &path, format)?;
        let back = load_trace(&path)?;
        let size = std::fs::metadata(&path)?.len();
        // The binary layout carries snapshots only.
        println!(
            "{name}: {size} bytes, snapshots identical: {}, metadata entries kept: {}",
            back.snapshots == seq.snapshots,
            back.metadata.len()
        );
    }

    let first = &seq.snapshots[0];
    for tap in &first.taps {
        println!("tap {:>7.2} ns  {:.3}", tap.delay * 1e9, tap.amplitude);
    }
    let rendered = render_cir(first, step, grid.points, 0.0)?;
    println!(
        "rendered back onto {} delay bins, energy {:.4}",
        rendered.len(),
        rendered.energy()
    );
    Ok(())
}
