//! Per-axis window statistics.

use crate::error::{Error, Result};
use crate::signal::{dwt_decompose, Wavelet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub sum: f64,
    /// Population variance.
    pub var: f64,
    /// Mean absolute deviation about the mean.
    pub mad: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub quan_25: f64,
    pub quan_50: f64,
    pub quan_75: f64,
    /// Excess kurtosis from population moments; 0 when degenerate.
    pub kurt: f64,
    /// Skewness from population moments; 0 when degenerate.
    pub skew: f64,
    /// Zero variance: `kurt` and `skew` are reported as 0.
    pub degenerate: bool,
}

impl WindowStats {
    /// Values in [`STAT_NAMES`](super::naming::STAT_NAMES) order.
    pub fn to_array(&self) -> [f64; 13] {
        [
            self.mean,
            self.std,
            self.sum,
            self.var,
            self.mad,
            self.median,
            self.min,
            self.max,
            self.quan_25,
            self.quan_50,
            self.quan_75,
            self.kurt,
            self.skew,
        ]
    }
}

/// Linear interpolation between order statistics of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn window_statistics(series: &[f64]) -> Result<WindowStats> {
    if series.len() < 2 {
        return Err(Error::param(format!(
            "window statistics need at least 2 values, got {}",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let sum: f64 = series.iter().sum();
    let mean = sum / n;
    let (mut m2, mut m3, mut m4, mut abs_dev) = (0.0, 0.0, 0.0, 0.0);
    for &v in series {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        abs_dev += d.abs();
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let scale = min.abs().max(max.abs());
    // Exactly constant input, or variance lost in rounding relative to the
    // data's magnitude.
    let degenerate = min == max || m2 <= (1e-12 * scale).powi(2);
    let (kurt, skew) = if degenerate {
        (0.0, 0.0)
    } else {
        (m4 / (m2 * m2) - 3.0, m3 / m2.powf(1.5))
    };
    let median = quantile_sorted(&sorted, 0.5);
    Ok(WindowStats {
        mean,
        std: m2.sqrt(),
        sum,
        var: m2,
        mad: abs_dev / n,
        median,
        min,
        max,
        quan_25: quantile_sorted(&sorted, 0.25),
        quan_50: median,
        quan_75: quantile_sorted(&sorted, 0.75),
        kurt,
        skew,
        degenerate,
    })
}

/// Mean, population variance, population std and energy (sum of squares) of
/// each band A, D1, D2, D3 of a 3-level decomposition, flattened in that
/// order. Band energies sum to the series' total energy.
pub fn wavelet_features(series: &[f64], wavelet: Wavelet) -> Result<[f64; 16]> {
    let coeffs = dwt_decompose(series, 3, wavelet)?;
    let bands: [&[f64]; 4] = [
        &coeffs.approximation,
        &coeffs.details[0],
        &coeffs.details[1],
        &coeffs.details[2],
    ];
    let mut out = [0.0; 16];
    for (i, band) in bands.iter().enumerate() {
        let n = band.len() as f64;
        let mean = band.iter().sum::<f64>() / n;
        let var = band.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        let energy = band.iter().map(|c| c * c).sum::<f64>();
        out[4 * i..4 * i + 4].copy_from_slice(&[mean, var, var.sqrt(), energy]);
    }
    Ok(out)
}
