use crate::dataset::Sample;

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningPolicy {
    /// Gaps of at most this many missing samples are linearly interpolated;
    /// longer gaps stay as segment boundaries.
    pub max_interpolated_gap: usize,
    /// Per-axis magnitude limit in g.
    pub clamp_g: f64,
    /// Nominal sampling period. `None` infers it per device as the lower median
    /// positive timestamp step.
    pub period_ms: Option<i64>,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        CleaningPolicy {
            max_interpolated_gap: 3,
            clamp_g: 16.0,
            period_ms: None,
        }
    }
}

/// Counts of every correction applied. Output rows =
/// input − `duplicates_removed` − `rows_dropped` + `rows_interpolated`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleaningReport {
    pub duplicates_removed: usize,
    pub rows_interpolated: usize,
    pub rows_dropped: usize,
    pub outliers_clamped: usize,
}

/// Lower median of the positive steps between consecutive timestamps.
pub fn nominal_period(samples: &[Sample]) -> Option<i64> {
    let mut steps: Vec<i64> = samples
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .filter(|&d| d > 0)
        .collect();
    if steps.is_empty() {
        return None;
    }
    steps.sort_unstable();
    Some(steps[(steps.len() - 1) / 2])
}

/// Drops rows with non-finite axes, collapses duplicate
/// `(device_id, timestamp)` keys (first row wins), fills short gaps by linear
/// interpolation and clamps outliers. Idempotent.
pub fn clean(samples: &[Sample], policy: &CleaningPolicy) -> (Vec<Sample>, CleaningReport) {
    let mut report = CleaningReport::default();
    let mut sorted: Vec<Sample> = samples
        .iter()
        .filter(|s| {
            let ok = s.acc_x.is_finite() && s.acc_y.is_finite() && s.acc_z.is_finite();
            if !ok {
                report.rows_dropped += 1;
            }
            ok
        })
        .cloned()
        .collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));

    let before = sorted.len();
    sorted.dedup_by(|b, a| a.key() == b.key());
    report.duplicates_removed = before - sorted.len();

    let mut out = Vec::with_capacity(sorted.len());
    let mut start = 0;
    while start < sorted.len() {
        let device = &sorted[start].device_id;
        let end = start
            + sorted[start..]
                .iter()
                .position(|s| &s.device_id != device)
                .unwrap_or(sorted.len() - start);
        let stream = &sorted[start..end];
        let period = policy.period_ms.or_else(|| nominal_period(stream));
        for (i, s) in stream.iter().enumerate() {
            out.push(s.clone());
            let (Some(period), Some(next)) = (period, stream.get(i + 1)) else {
                continue;
            };
            let span = next.timestamp - s.timestamp;
            let missing = ((span as f64 / period as f64).round() as i64 - 1).max(0) as usize;
            if missing == 0 || missing > policy.max_interpolated_gap {
                continue;
            }
            let label = if s.label == next.label || next.label.is_none() {
                s.label.clone()
            } else {
                s.label.clone().or_else(|| next.label.clone())
            };
            for k in 1..=missing {
                let frac = k as f64 / (missing + 1) as f64;
                let lerp = |a: f64, b: f64| a + (b - a) * frac;
                out.push(Sample {
                    device_id: s.device_id.clone(),
                    timestamp: s.timestamp + (span as f64 * frac).round() as i64,
                    acc_x: lerp(s.acc_x, next.acc_x),
                    acc_y: lerp(s.acc_y, next.acc_y),
                    acc_z: lerp(s.acc_z, next.acc_z),
                    label: label.clone(),
                });
                report.rows_interpolated += 1;
            }
        }
        start = end;
    }

    let limit = policy.clamp_g.abs();
    for s in &mut out {
        let mut clamped = false;
        for v in [&mut s.acc_x, &mut s.acc_y, &mut s.acc_z] {
            if v.abs() > limit {
                *v = v.clamp(-limit, limit);
                clamped = true;
            }
        }
        if clamped {
            report.outliers_clamped += 1;
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: i64, v: f64) -> Sample {
        Sample {
            device_id: "a".into(),
            timestamp: t,
            acc_x: v,
            acc_y: 0.0,
            acc_z: 1.0,
            label: Some("RES".into()),
        }
    }

    #[test]
    fn duplicates_collapse() {
        let (out, r) = clean(&[s(0, 1.0), s(0, 1.0)], &CleaningPolicy::default());
        assert_eq!(out.len(), 1);
        assert_eq!(r.duplicates_removed, 1);
    }

    #[test]
    fn single_gap_is_interpolated() {
        let input = [s(0, 0.0), s(10, 1.0), s(30, 3.0), s(40, 4.0)];
        let (out, r) = clean(&input, &CleaningPolicy::default());
        assert_eq!(r.rows_interpolated, 1);
        assert_eq!(out.len(), 5);
        assert_eq!(out[2].timestamp, 20);
        assert!((out[2].acc_x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn long_gap_is_left_alone() {
        let input = [s(0, 0.0), s(10, 1.0), s(20, 1.0), s(100, 3.0), s(110, 3.0)];
        let (out, r) = clean(&input, &CleaningPolicy::default());
        assert_eq!(r.rows_interpolated, 0);
        assert_eq!(out.len(), input.len());
    }

    #[test]
    fn outliers_clamped() {
        let (out, r) = clean(&[s(0, 50.0), s(10, -3.0)], &CleaningPolicy::default());
        assert_eq!(out[0].acc_x, 16.0);
        assert_eq!(out[1].acc_x, -3.0);
        assert_eq!(r.outliers_clamped, 1);
    }

    #[test]
    fn non_finite_rows_dropped_then_refilled() {
        let input = [s(0, 0.0), s(10, f64::NAN), s(20, 2.0), s(30, 3.0)];
        let (out, r) = clean(&input, &CleaningPolicy::default());
        assert_eq!(r.rows_dropped, 1);
        assert_eq!(r.rows_interpolated, 1);
        assert_eq!(out.len(), 4);
        assert!((out[1].acc_x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn idempotent_and_consistent_counts() {
        let mut input: Vec<Sample> = (0..40)
            .filter(|i| ![5, 6, 20, 21, 22, 23, 24].contains(i))
            .map(|i| s(10 * i, (i as f64 * 0.3).sin()))
            .collect();
        input.push(s(0, 0.0));
        input[10].acc_x = f64::INFINITY;
        input[12].acc_x = -40.0;
        let (once, r) = clean(&input, &CleaningPolicy::default());
        assert_eq!(
            once.len(),
            input.len() - r.duplicates_removed - r.rows_dropped + r.rows_interpolated
        );
        let (twice, r2) = clean(&once, &CleaningPolicy::default());
        assert_eq!(once, twice);
        assert_eq!(r2, CleaningReport::default());
    }
}
