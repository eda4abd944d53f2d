//! Two-sample Kolmogorov-Smirnov statistic and feature-stability categories.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;

/// Supremum distance between the empirical CDFs of `a` and `b`, evaluated at
/// every point of the pooled sample. NaN values are rejected. The maximum is
/// taken over exact integer numerators `|i·m − j·n|` and divided once, so the
/// result is the correctly rounded value of the rational `D`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("KS statistic needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::param("KS statistic input contains NaN"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (n, m) = (a.len() as u128, b.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0u128;
    while i < a.len() || j < b.len() {
        // Next pooled value; advance both sides past every copy of it.
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        best = best.max((i as u128 * m).abs_diff(j as u128 * n));
    }
    Ok(best as f64 / (n * m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityCategory {
    Stable,
    Moderate,
    Instability,
}

impl StabilityCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityCategory::Stable => "Stable",
            StabilityCategory::Moderate => "Moderate Stability",
            StabilityCategory::Instability => "Instability",
        }
    }

    /// The Stable band has no reference example; its cut-off is a guess.
    pub fn is_extrapolated(self) -> bool {
        self == StabilityCategory::Stable
    }
}

impl fmt::Display for StabilityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityThresholds {
    /// `D` below this is Stable.
    pub stable_below: f64,
    /// `D` above this is Instability; anything between is Moderate.
    pub unstable_above: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        StabilityThresholds {
            stable_below: 0.2,
            unstable_above: 0.45,
        }
    }
}

impl StabilityThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.stable_below)
            || !(0.0..=1.0).contains(&self.unstable_above)
            || self.stable_below > self.unstable_above
        {
            return Err(Error::param(format!(
                "stability thresholds must satisfy 0 <= {} <= {} <= 1",
                self.stable_below, self.unstable_above
            )));
        }
        Ok(())
    }

    pub fn categorize(&self, d: f64) -> StabilityCategory {
        if d < self.stable_below {
            StabilityCategory::Stable
        } else if d <= self.unstable_above {
            StabilityCategory::Moderate
        } else {
            StabilityCategory::Instability
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub feature: String,
    pub mean_abs_shap: f64,
    pub ks_statistic: f64,
    pub category: StabilityCategory,
}

/// KS distance between the train and test marginals of each ranked feature.
/// `features` pairs a column name with its mean |φ|; output keeps that order.
pub fn stability_report(
    train: &FeatureTable,
    test: &FeatureTable,
    features: &[(String, f64)],
    thresholds: &StabilityThresholds,
) -> Result<Vec<StabilityEntry>> {
    thresholds.validate()?;
    features
        .iter()
        .map(|(name, shap)| {
            let d = ks_statistic(&train.column(name)?, &test.column(name)?)?;
            Ok(StabilityEntry {
                feature: name.clone(),
                mean_abs_shap: *shap,
                ks_statistic: d,
                category: thresholds.categorize(d),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[10.0, 11.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), 1.0 / 3.0);
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    #[test]
    fn reference_categories() {
        let t = StabilityThresholds::default();
        let cases = [
            (0.2, StabilityCategory::Moderate),
            (0.3, StabilityCategory::Moderate),
            (0.4, StabilityCategory::Moderate),
            (0.5, StabilityCategory::Instability),
            (0.6, StabilityCategory::Instability),
            (0.1, StabilityCategory::Stable),
        ];
        for (d, c) in cases {
            assert_eq!(t.categorize(d), c, "D = {d}");
        }
        assert_eq!(StabilityCategory::Moderate.to_string(), "Moderate Stability");
    }
}
