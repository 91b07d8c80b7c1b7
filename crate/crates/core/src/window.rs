use serde::{Deserialize, Serialize};

/// Tapering window applied before a transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
    Kaiser {
        beta: f64,
    },
}

impl Window {
    /// `n` window coefficients scaled to unit mean (unit coherent gain).
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = match *self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n > 1 => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
                .collect(),
            Window::Kaiser { beta } if n > 1 => (0..n)
                .map(|i| kaiser(2.0 * i as f64 / (n - 1) as f64 - 1.0, beta))
                .collect(),
            _ => vec![1.0; n],
        };
        let mean = raw.iter().sum::<f64>() / n.max(1) as f64;
        raw.into_iter().map(|w| w / mean).collect()
    }
}

/// Kaiser window at normalized position `x` in [-1, 1]; zero outside.
pub fn kaiser(x: f64, beta: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - x * x).sqrt()) / bessel_i0(beta)
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
