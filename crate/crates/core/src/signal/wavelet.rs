//! Multi-level discrete wavelet transform with orthonormal filters.
//!
//! Each level applies periodized (circular) analysis filters followed by
//! dyadic downsampling. A level whose input has odd length transforms the
//! leading even-length prefix and carries the trailing sample unchanged onto
//! the end of the approximation band. Every level is therefore an orthogonal
//! map, so coefficient energy equals signal energy for any input length and
//! reconstruction is exact up to rounding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[derive(Default)]
pub enum Wavelet {
    Haar,
    /// Daubechies wavelet with four vanishing moments (eight taps).
    #[default]
    Db4,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const HAAR_LO: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];

// Reconstruction low-pass taps; analysis uses them through the circular
// correlation in `analysis_step`.
const DB4_LO: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_7,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_09,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

impl Wavelet {
    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Db4 => "db4",
        }
    }

    /// Low-pass scaling filter `h`.
    pub fn low_pass(self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR_LO,
            Wavelet::Db4 => &DB4_LO,
        }
    }

    /// Quadrature-mirror high-pass filter `g[k] = (-1)^k h[L-1-k]`.
    pub fn high_pass(self) -> Vec<f64> {
        let h = self.low_pass();
        let len = h.len();
        (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[len - 1 - k]
            })
            .collect()
    }
}


impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(Wavelet::Haar),
            "db4" | "daubechies4" => Ok(Wavelet::Db4),
            other => Err(Error::param(format!("unknown wavelet {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoeffs {
    /// Level-`levels` approximation band (A).
    pub approximation: Vec<f64>,
    /// Detail bands, `details[0]` = D1 (finest).
    pub details: Vec<Vec<f64>>,
    pub wavelet: Wavelet,
    pub levels: usize,
}

impl WaveletCoeffs {
    pub fn energy(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
        sq(&self.approximation) + self.details.iter().map(|d| sq(d)).sum::<f64>()
    }
}

fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let even = x.len() - x.len() % 2;
    let half = even / 2;
    let mut approx = Vec::with_capacity(half + x.len() % 2);
    let mut detail = Vec::with_capacity(half);
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (j, (&h, &g)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * k + j) % even];
            a += h * v;
            d += g * v;
        }
        approx.push(a);
        detail.push(d);
    }
    if even < x.len() {
        approx.push(x[even]);
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    let half = detail.len();
    let carried = match approx.len().checked_sub(half) {
        Some(0) => false,
        Some(1) => true,
        _ => {
            return Err(Error::Structure(format!(
                "approximation length {} incompatible with detail length {half}",
                approx.len()
            )))
        }
    };
    let even = 2 * half;
    let mut out = vec![0.0; even + usize::from(carried)];
    if even > 0 {
        for k in 0..half {
            for (j, (&h, &g)) in lo.iter().zip(hi).enumerate() {
                out[(2 * k + j) % even] += h * approx[k] + g * detail[k];
            }
        }
    }
    if carried {
        out[even] = approx[half];
    }
    Ok(out)
}

/// Minimum series length accepted for a `levels`-level decomposition.
pub fn min_length(levels: usize) -> usize {
    1usize << levels
}

pub fn dwt_decompose(series: &[f64], levels: usize, wavelet: Wavelet) -> Result<WaveletCoeffs> {
    if levels == 0 {
        return Err(Error::param("wavelet decomposition needs at least one level"));
    }
    let min_len = min_length(levels);
    if series.len() < min_len {
        return Err(Error::Decomposition {
            len: series.len(),
            levels,
            min_len,
        });
    }
    let lo = wavelet.low_pass();
    let hi = wavelet.high_pass();
    let mut details = Vec::with_capacity(levels);
    let mut current = series.to_vec();
    for _ in 0..levels {
        let (a, d) = analysis_step(&current, lo, &hi);
        details.push(d);
        current = a;
    }
    Ok(WaveletCoeffs {
        approximation: current,
        details,
        wavelet,
        levels,
    })
}

pub fn dwt_reconstruct(coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
    if coeffs.levels != coeffs.details.len() {
        return Err(Error::Structure(format!(
            "levels = {} but {} detail bands present",
            coeffs.levels,
            coeffs.details.len()
        )));
    }
    if coeffs.levels == 0 {
        return Err(Error::Structure("no decomposition levels".into()));
    }
    let lo = coeffs.wavelet.low_pass();
    let hi = coeffs.wavelet.high_pass();
    let mut current = coeffs.approximation.clone();
    for detail in coeffs.details.iter().rev() {
        current = synthesis_step(&current, detail, lo, &hi)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn filters_are_orthonormal() {
        for w in [Wavelet::Haar, Wavelet::Db4] {
            let h = w.low_pass();
            let g = w.high_pass();
            let sum: f64 = h.iter().sum();
            assert!((sum - SQRT_2).abs() < 1e-12, "{w}: sum h = {sum}");
            for shift in (0..h.len()).step_by(2) {
                let hh: f64 = (0..h.len() - shift).map(|k| h[k] * h[k + shift]).sum();
                let gg: f64 = (0..h.len() - shift).map(|k| g[k] * g[k + shift]).sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert!((hh - expected).abs() < 1e-12, "{w} h shift {shift}: {hh}");
                assert!((gg - expected).abs() < 1e-12, "{w} g shift {shift}: {gg}");
            }
        }
    }

    #[test]
    fn constant_haar_has_zero_detail() {
        let c = dwt_decompose(&[1.0; 4], 1, Wavelet::Haar).unwrap();
        assert_eq!(c.details[0], vec![0.0, 0.0]);
        for a in &c.approximation {
            assert!((a - SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn two_sample_haar_matches_matrix() {
        let c = dwt_decompose(&[4.0, 2.0], 1, Wavelet::Haar).unwrap();
        // [a, d] = 1/sqrt2 * [[1, 1], [1, -1]] * [4, 2]
        let a = (4.0 + 2.0) / SQRT_2;
        let d = (4.0 - 2.0) / SQRT_2;
        assert!((c.approximation[0] - a).abs() < 1e-15);
        assert!((c.approximation[0] - 3.0 * SQRT_2).abs() < 1e-12);
        assert!((c.details[0][0] - d).abs() < 1e-15);
        assert!((c.details[0][0] - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_known_haar_coefficients() {
        let coeffs = WaveletCoeffs {
            approximation: vec![SQRT_2, SQRT_2],
            details: vec![vec![0.0, 0.0]],
            wavelet: Wavelet::Haar,
            levels: 1,
        };
        let x = dwt_reconstruct(&coeffs).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_three_levels() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        for w in [Wavelet::Haar, Wavelet::Db4] {
            let c = dwt_decompose(&x, 3, w).unwrap();
            let y = dwt_reconstruct(&c).unwrap();
            assert_eq!(y.len(), x.len());
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn odd_lengths_carry_the_last_sample() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let c = dwt_decompose(&x, 1, Wavelet::Haar).unwrap();
        assert_eq!(c.approximation.len(), 5);
        assert_eq!(c.details[0].len(), 4);
        assert_eq!(c.approximation[4], 9.0);
    }

    #[test]
    fn too_short_names_minimum_length() {
        let err = dwt_decompose(&[1.0; 7], 3, Wavelet::Db4).unwrap_err();
        assert!(err.to_string().contains("minimum length 8"), "{err}");
    }

    #[test]
    fn inconsistent_lengths_rejected() {
        let coeffs = WaveletCoeffs {
            approximation: vec![1.0, 2.0, 3.0],
            details: vec![vec![0.0]],
            wavelet: Wavelet::Haar,
            levels: 1,
        };
        assert!(matches!(dwt_reconstruct(&coeffs), Err(Error::Structure(_))));
        let coeffs = WaveletCoeffs {
            approximation: vec![1.0],
            details: vec![vec![0.0]],
            wavelet: Wavelet::Haar,
            levels: 2,
        };
        assert!(matches!(dwt_reconstruct(&coeffs), Err(Error::Structure(_))));
    }

    #[test]
    fn parses_names() {
        assert_eq!("Haar".parse::<Wavelet>().unwrap(), Wavelet::Haar);
        assert_eq!("db4".parse::<Wavelet>().unwrap(), Wavelet::Db4);
        assert!("sym5".parse::<Wavelet>().is_err());
    }
}
