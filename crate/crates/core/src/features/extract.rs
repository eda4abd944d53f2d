//! Sliding-window feature extraction over per-device streams.

use std::collections::HashMap;

use log::warn;
use rayon::prelude::*;

use crate::dataset::labels::label_rank;
use crate::dataset::{nominal_period, Sample};
use crate::error::{Error, Result};
use crate::features::naming::base_column_names;
use crate::features::stats::{wavelet_features, window_statistics};
use crate::features::window::{
    mean_vector_magnitude, movement_variation, orientation_angles, signal_magnitude_area,
    vector_magnitude, Window,
};
use crate::features::{ExtractConfig, FeatureTable, RowMeta};
use crate::signal::{savitzky_golay_last, shannon_entropy, signal_energy};

/// Modal label; ties go to the label earliest in the fixed vocabulary order.
/// `None` when no sample carries a label.
pub fn modal_label<'a>(labels: impl IntoIterator<Item = Option<&'a str>>) -> Option<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in labels.into_iter().flatten() {
        *counts.entry(l).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then_with(|| label_rank(lb).cmp(&label_rank(la))))
        .map(|(l, _)| l.to_string())
}

/// Number of windows a contiguous run of `n` samples yields.
pub fn window_count(n: usize, window_length: usize, step_length: usize) -> usize {
    if n < window_length {
        0
    } else {
        (n - window_length) / step_length + 1
    }
}

/// Computes the base feature vector of one window, in
/// [`base_column_names`] order. The flag is set for zero-variance axes or an
/// undefined orientation; such features are emitted as finite zeros.
pub fn window_features(window: &Window, config: &ExtractConfig) -> Result<(Vec<f64>, bool)> {
    let samples = &window.samples;
    let n = samples.len();
    let axes: [Vec<f64>; 3] = [window.axis(0), window.axis(1), window.axis(2)];
    let mut degenerate = false;
    let mut row = Vec::with_capacity(100);

    row.extend_from_slice(&samples[n - 1]);

    let sg_window = {
        let w = config.sg_window.min(n);
        if w.is_multiple_of(2) {
            w - 1
        } else {
            w
        }
    };
    let sg_order = config.sg_polyorder.min(sg_window - 1);
    for axis in &axes {
        row.push(savitzky_golay_last(axis, sg_window, sg_order)?);
    }

    let magnitudes: Vec<f64> = samples.iter().map(|s| vector_magnitude(*s)).collect();
    row.push(signal_magnitude_area(samples)?);
    row.push(mean_vector_magnitude(samples)?);
    row.push(movement_variation(samples)?);
    row.push(signal_energy(&magnitudes)?);
    row.push(shannon_entropy(&magnitudes, config.entropy_bins)?);
    match orientation_angles(samples) {
        Ok((roll, pitch)) => row.extend([roll, pitch]),
        Err(Error::UndefinedOrientation) => {
            degenerate = true;
            row.extend([0.0, 0.0]);
        }
        Err(e) => return Err(e),
    }

    for axis in &axes {
        let stats = window_statistics(axis)?;
        degenerate |= stats.degenerate;
        row.extend(stats.to_array());
    }
    for axis in &axes {
        row.extend(wavelet_features(axis, config.wavelet)?);
    }
    Ok((row, degenerate))
}

/// Splits a device's sorted stream wherever consecutive timestamps are more
/// than 1.5 nominal periods apart, so windows never span a gap.
fn contiguous_runs(stream: &[Sample]) -> Vec<&[Sample]> {
    let Some(period) = nominal_period(stream) else {
        return vec![stream];
    };
    let limit = period as f64 * 1.5;
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..stream.len() {
        if (stream[i].timestamp - stream[i - 1].timestamp) as f64 > limit {
            runs.push(&stream[start..i]);
            start = i;
        }
    }
    runs.push(&stream[start..]);
    runs
}

/// Slides a `window_length` window in `step_length` steps over each device's
/// contiguous runs and computes one feature row per window. Input must be
/// strictly increasing in `(device_id, timestamp)`. Rows come out in
/// `(device_id, timestamp_max)` order regardless of thread count.
pub fn extract_features(samples: &[Sample], config: &ExtractConfig) -> Result<FeatureTable> {
    config.validate()?;
    for (i, w) in samples.windows(2).enumerate() {
        if w[0].key() >= w[1].key() {
            return Err(Error::Ordering(format!(
                "sample {} ({}, {}) does not come after ({}, {})",
                i + 1,
                w[1].device_id,
                w[1].timestamp,
                w[0].device_id,
                w[0].timestamp
            )));
        }
    }
    let (length, step) = (config.window.window_length, config.window.step_length);

    let mut windows: Vec<(&[Sample], usize)> = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let device = &samples[start].device_id;
        let end = start
            + samples[start..]
                .iter()
                .position(|s| &s.device_id != device)
                .unwrap_or(samples.len() - start);
        let mut offset = 0;
        let mut produced = 0;
        for run in contiguous_runs(&samples[start..end]) {
            let count = window_count(run.len(), length, step);
            for k in 0..count {
                windows.push((&run[k * step..k * step + length], offset + k * step));
            }
            produced += count;
            offset += run.len();
        }
        if produced == 0 {
            warn!(
                "device {device}: {} samples yield no {length}-sample window",
                end - start
            );
        }
        start = end;
    }

    let rows: Vec<Result<(Vec<f64>, RowMeta)>> = windows
        .par_iter()
        .map(|(slice, start_index)| {
            let window = Window {
                samples: slice.iter().map(Sample::acc).collect(),
                start_index: *start_index,
                timestamp_max: slice.iter().map(|s| s.timestamp).max().unwrap(),
            };
            let (values, degenerate) = window_features(&window, config)?;
            Ok((
                values,
                RowMeta {
                    device_id: slice[0].device_id.clone(),
                    timestamp_max: window.timestamp_max,
                    label: modal_label(slice.iter().map(|s| s.label.as_deref())),
                    degenerate,
                },
            ))
        })
        .collect();

    let mut table = FeatureTable::empty(base_column_names());
    for r in rows {
        let (values, meta) = r?;
        table.push_row(values, meta)?;
    }
    if table.n_rows() == 0 {
        warn!("feature extraction produced no rows (streams shorter than {length} samples)");
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::WindowConfig;

    fn stream(device: &str, n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                Sample {
                    device_id: device.into(),
                    timestamp: 100 * i as i64,
                    acc_x: (t * 0.3).sin() * 0.2,
                    acc_y: (t * 0.17).cos() * 0.1 + 0.1,
                    acc_z: 0.9 + 0.05 * (t * 0.05).sin(),
                    label: Some(if i < n / 2 { "STN" } else { "RUS" }.into()),
                }
            })
            .collect()
    }

    fn config(window: usize, step: usize) -> ExtractConfig {
        ExtractConfig {
            window: WindowConfig {
                window_length: window,
                step_length: step,
                max_lag: 0,
            },
            ..ExtractConfig::default()
        }
    }

    #[test]
    fn row_counts() {
        let t = extract_features(&stream("a", 160), &config(80, 80)).unwrap();
        assert_eq!(t.n_rows(), 2);
        let t = extract_features(&stream("a", 663), &config(156, 39)).unwrap();
        assert_eq!(t.n_rows(), 14);
        assert_eq!(t.n_cols(), 100);
    }

    #[test]
    fn short_stream_gives_empty_table() {
        let t = extract_features(&stream("a", 50), &config(80, 40)).unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.n_cols(), 100);
    }

    #[test]
    fn unsorted_input_rejected() {
        let mut s = stream("a", 100);
        s.swap(3, 4);
        assert!(matches!(extract_features(&s, &config(20, 10)), Err(Error::Ordering(_))));
    }

    #[test]
    fn windows_do_not_span_gaps() {
        let mut s = stream("a", 200);
        for x in s.iter_mut().skip(100) {
            x.timestamp += 10_000;
        }
        // 100 + 100 contiguous samples, window 60 step 20 → 3 + 3 rows
        let t = extract_features(&s, &config(60, 20)).unwrap();
        assert_eq!(t.n_rows(), 6);
    }

    #[test]
    fn modal_label_ties_use_vocabulary_order() {
        assert_eq!(
            modal_label([Some("RUS"), Some("STN"), Some("RUS"), Some("STN")]).as_deref(),
            Some("STN")
        );
        assert_eq!(
            modal_label([Some("ETC"), Some("REL"), Some("ETC")]).as_deref(),
            Some("ETC")
        );
        assert_eq!(modal_label([None, None]), None);
    }

    #[test]
    fn last_sample_features_and_labels() {
        let s = stream("a", 160);
        let t = extract_features(&s, &config(80, 80)).unwrap();
        assert_eq!(t.rows[0][0], s[79].acc_x);
        assert_eq!(t.row_meta[0].timestamp_max, s[79].timestamp);
        assert_eq!(t.row_meta[0].label.as_deref(), Some("STN"));
        assert_eq!(t.row_meta[1].label.as_deref(), Some("RUS"));
    }
}
