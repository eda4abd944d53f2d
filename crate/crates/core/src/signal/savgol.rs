//! Savitzky-Golay smoothing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Convolution weights that evaluate the least-squares polynomial fitted to a
/// `window_len` window at `offset` samples from the window centre.
///
/// Abscissae are scaled to `[-1, 1]` so the normal equations stay well
/// conditioned for long windows and higher orders.
fn weights(window_len: usize, polyorder: usize, offset: isize) -> Result<Vec<f64>> {
    let half = (window_len / 2) as f64;
    let scale = if half > 0.0 { half } else { 1.0 };
    let cols = polyorder + 1;
    let design = DMatrix::from_fn(window_len, cols, |r, c| {
        ((r as f64 - half) / scale).powi(c as i32)
    });
    let gram = design.transpose() * &design;
    let at = offset as f64 / scale;
    let basis = DVector::from_fn(cols, |c, _| at.powi(c as i32));
    let solved = gram
        .lu()
        .solve(&basis)
        .ok_or_else(|| Error::param("Savitzky-Golay normal equations are singular"))?;
    Ok((&design * solved).iter().copied().collect())
}

/// Smooths `series` with a centred least-squares polynomial of order
/// `polyorder` over `window_len` samples.
///
/// The first and last `window_len / 2` outputs come from the polynomial fitted
/// to the first (resp. last) full window, evaluated at the edge positions, so
/// the output has the same length as the input.
pub fn savitzky_golay(series: &[f64], window_len: usize, polyorder: usize) -> Result<Vec<f64>> {
    if window_len == 0 || window_len.is_multiple_of(2) {
        return Err(Error::param(format!(
            "Savitzky-Golay window length must be odd and positive, got {window_len}"
        )));
    }
    if polyorder >= window_len {
        return Err(Error::param(format!(
            "Savitzky-Golay polyorder {polyorder} must be less than window length {window_len}"
        )));
    }
    if series.len() < window_len {
        return Err(Error::param(format!(
            "series of length {} is shorter than the Savitzky-Golay window {window_len}",
            series.len()
        )));
    }

    let n = series.len();
    let half = window_len / 2;
    let centre = weights(window_len, polyorder, 0)?;
    let dot = |w: &[f64], start: usize| -> f64 {
        w.iter()
            .zip(&series[start..start + window_len])
            .map(|(a, b)| a * b)
            .sum()
    };

    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate().take(n - half).skip(half) {
        *slot = dot(&centre, i - half);
    }
    for i in 0..half {
        let w = weights(window_len, polyorder, i as isize - half as isize)?;
        out[i] = dot(&w, 0);
        let w = weights(window_len, polyorder, (half - i) as isize)?;
        out[n - 1 - i] = dot(&w, n - window_len);
    }
    Ok(out)
}

/// Filtered value at the final sample of `series`, i.e. the last full
/// window's polynomial evaluated at its right edge.
pub fn savitzky_golay_last(series: &[f64], window_len: usize, polyorder: usize) -> Result<f64> {
    let filtered = savitzky_golay(series, window_len, polyorder)?;
    Ok(filtered[filtered.len() - 1])
}
