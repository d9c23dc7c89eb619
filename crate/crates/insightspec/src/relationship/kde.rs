//! Gaussian kernel density estimation.

use std::f64::consts::PI;

/// Silverman's rule of thumb, 1.06 * s * n^(-1/5), with the sample standard
/// deviation s (n - 1 denominator). None when it would not be positive:
/// fewer than two samples, or zero spread.
pub(crate) fn silverman_bandwidth(samples: &[f64]) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    (sd > 0.0).then(|| 1.06 * sd * (n as f64).powf(-0.2))
}

/// Density at `x`: the mean of Gaussian kernels centered on the samples,
/// each scaled by the bandwidth `h`.
pub(crate) fn density(samples: &[f64], h: f64, x: f64) -> f64 {
    let norm = 1.0 / (2.0 * PI).sqrt();
    let sum: f64 = samples
        .iter()
        .map(|s| {
            let z = (x - s) / h;
            norm * (-0.5 * z * z).exp()
        })
        .sum();
    sum / (samples.len() as f64 * h)
}
