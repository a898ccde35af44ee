use std::f64::consts::TAU;

use crate::error::{domain, Result};

/// n points from a to b inclusive; a single point gives [a].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                let m = (n - 1) as f64;
                (a * (m - i as f64) + b * i as f64) / m
            })
            .collect(),
    }
}

/// Like [`linspace`] with interior points rounded to 15 significant digits,
/// so decimal parameter grids print cleanly.
pub fn decimal_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v = linspace(a, b, n);
    let last = v.len().saturating_sub(1);
    for x in v.iter_mut().take(last).skip(1) {
        *x = format!("{:.14e}", *x).parse().unwrap_or(*x);
    }
    v
}

/// Peak of a discrete amplitude spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    /// Angular frequency of the largest non-constant bin.
    pub peak: f64,
    /// Spacing of the angular frequency bins.
    pub bin_width: f64,
}

/// Dominant angular frequency of uniformly spaced samples (mean removed).
pub fn dominant_frequency(values: &[f64], dt: f64) -> Result<Spectrum> {
    let n = values.len();
    if n < 4 || !(dt > 0.0) {
        return Err(domain("spectrum needs at least four samples and dt > 0"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let bin = TAU / (n as f64 * dt);
    let mut best = (0usize, -1.0f64);
    for j in 1..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, x) in values.iter().enumerate() {
            let ph = TAU * (j * i % n) as f64 / n as f64;
            re += (x - mean) * ph.cos();
            im -= (x - mean) * ph.sin();
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (j, p);
        }
    }
    Ok(Spectrum {
        peak: best.0 as f64 * bin,
        bin_width: bin,
    })
}

/// Value at x = 0 of the quadratic through three points.
pub fn richardson_to_zero(x: [f64; 3], y: [f64; 3]) -> Result<f64> {
    if x[0] == x[1] || x[1] == x[2] || x[0] == x[2] {
        return Err(domain("extrapolation nodes must be distinct"));
    }
    let mut acc = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= x[j] / (x[j] - x[i]);
            }
        }
        acc += w * y[i];
    }
    Ok(acc)
}
