use crate::error::{Error, Result};

pub const DEFAULT_ENTROPY_BINS: usize = 10;

/// Shannon entropy (natural log) of an equal-width histogram over
/// `[min, max]`. A constant series occupies a single bin and yields 0.
pub fn shannon_entropy(series: &[f64], bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::param("entropy needs at least one bin"));
    }
    if series.is_empty() {
        return Err(Error::param("entropy of an empty series"));
    }
    let (min, max) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if min == max {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    let width = max - min;
    for &v in series {
        let idx = (((v - min) / width) * bins as f64) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let n = series.len() as f64;
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>())
}

/// Mean squared amplitude.
pub fn signal_energy(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::param("energy of an empty series"));
    }
    Ok(series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_cases() {
        assert_eq!(shannon_entropy(&[3.0; 9], 10).unwrap(), 0.0);
        let h = shannon_entropy(&[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-12);
        assert!(shannon_entropy(&[1.0], 0).is_err());
        assert!(shannon_entropy(&[], 3).is_err());
    }

    #[test]
    fn energy_cases() {
        assert_eq!(signal_energy(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(signal_energy(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert!(signal_energy(&[]).is_err());
    }
}
