//! Thin wrappers over `rustfft` with the normalizations used in this crate.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT, unscaled: `X[k] = Σ x[n] e^{-j2πkn/N}`.
pub fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT with `1/N` scaling, the exact inverse of [`forward`].
pub fn inverse(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Forward DFT scaled by `1/√N`, energy preserving.
pub fn forward_unitary(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = forward(values);
    let scale = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Signed baseband frequency of bin `k` of an `n`-point DFT at `sample_rate`.
/// Bins at or above `n/2` map to negative frequencies.
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let signed = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    signed * sample_rate / n as f64
}

/// Applies a frequency response `h(f)` to `samples` with linear (not circular)
/// semantics: the block is zero-padded to a power of two at least
/// `samples.len() + extra` long, filtered, and truncated back.
///
/// `h` receives the signed baseband frequency of each bin.
pub fn filter_padded(
    samples: &[Complex64],
    sample_rate: f64,
    extra: usize,
    h: impl Fn(f64) -> Complex64,
) -> Vec<Complex64> {
    let n = samples.len();
    let m = (n + extra).next_power_of_two();
    let mut buf = samples.to_vec();
    buf.resize(m, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= h(bin_frequency(k, m, sample_rate));
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.truncate(n);
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}
