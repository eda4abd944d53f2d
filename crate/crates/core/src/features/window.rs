//! Whole-window tri-axial measures.

use crate::error::{Error, Result};

/// A run of consecutive `(x, y, z)` readings from one device.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Vec<[f64; 3]>,
    /// Offset of the first sample within its device stream.
    pub start_index: usize,
    /// Largest timestamp in the window (epoch ms).
    pub timestamp_max: i64,
}

impl Window {
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[axis]).collect()
    }
}

/// Mean over the window of `|x| + |y| + |z|`.
pub fn signal_magnitude_area(samples: &[[f64; 3]]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::param("signal magnitude area of an empty window"));
    }
    let total: f64 = samples
        .iter()
        .map(|s| s[0].abs() + s[1].abs() + s[2].abs())
        .sum();
    Ok(total / samples.len() as f64)
}

pub fn vector_magnitude(sample: [f64; 3]) -> f64 {
    (sample[0] * sample[0] + sample[1] * sample[1] + sample[2] * sample[2]).sqrt()
}

/// Window-level VM: the mean of per-sample magnitudes.
pub fn mean_vector_magnitude(samples: &[[f64; 3]]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::param("vector magnitude of an empty window"));
    }
    Ok(samples.iter().map(|s| vector_magnitude(*s)).sum::<f64>() / samples.len() as f64)
}

/// Mean absolute first difference, summed over the three axes.
pub fn movement_variation(samples: &[[f64; 3]]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::param("movement variation needs at least 2 samples"));
    }
    let total: f64 = samples
        .windows(2)
        .map(|w| {
            (w[1][0] - w[0][0]).abs() + (w[1][1] - w[0][1]).abs() + (w[1][2] - w[0][2]).abs()
        })
        .sum();
    Ok(total / (samples.len() - 1) as f64)
}

/// Roll and pitch (radians) of the window's mean gravity vector:
/// `roll = atan2(my, mz)`, `pitch = atan2(-mx, sqrt(my² + mz²))`.
///
/// Yaw is not observable from an accelerometer alone and is not produced.
pub fn orientation_angles(samples: &[[f64; 3]]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::param("orientation of an empty window"));
    }
    let n = samples.len() as f64;
    let mut mean = [0.0; 3];
    for s in samples {
        for a in 0..3 {
            mean[a] += s[a];
        }
    }
    let [mx, my, mz] = mean.map(|v| v / n);
    if mx == 0.0 && my == 0.0 && mz == 0.0 {
        return Err(Error::UndefinedOrientation);
    }
    let roll = my.atan2(mz);
    let pitch = (-mx).atan2((my * my + mz * mz).sqrt());
    Ok((roll, pitch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn sma_cases() {
        assert_eq!(signal_magnitude_area(&[[0.0; 3]; 4]).unwrap(), 0.0);
        assert_eq!(signal_magnitude_area(&[[1.0, -2.0, 2.0]]).unwrap(), 5.0);
        assert!(signal_magnitude_area(&[]).is_err());
    }

    #[test]
    fn vm_cases() {
        assert_eq!(vector_magnitude([3.0, 4.0, 0.0]), 5.0);
        assert_eq!(vector_magnitude([0.0, 0.0, 0.0]), 0.0);
        assert_eq!(mean_vector_magnitude(&[[3.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).unwrap(), 3.0);
    }

    #[test]
    fn movement_variation_cases() {
        assert_eq!(movement_variation(&[[0.5, 1.0, -1.0]; 5]).unwrap(), 0.0);
        assert_eq!(movement_variation(&[[0.0; 3], [1.0; 3]]).unwrap(), 3.0);
        assert!(movement_variation(&[[1.0; 3]]).is_err());
    }

    #[test]
    fn orientation_cases() {
        assert_eq!(orientation_angles(&[[0.0, 0.0, 1.0]]).unwrap(), (0.0, 0.0));
        let (roll, pitch) = orientation_angles(&[[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(roll, 0.0);
        assert_eq!(pitch, -FRAC_PI_2);
        let (roll, _) = orientation_angles(&[[0.0, 1.0, 1.0]]).unwrap();
        assert!((roll - FRAC_PI_4).abs() < 1e-12);
        assert!(matches!(
            orientation_angles(&[[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0]]),
            Err(Error::UndefinedOrientation)
        ));
    }
}
