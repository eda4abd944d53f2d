//! Windowed feature extraction: per-window instantaneous, statistical,
//! wavelet and orientation features, then lag augmentation.

mod extract;
mod io;
mod lag;
pub mod naming;
mod stats;
mod window;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::signal::Wavelet;

pub use extract::{extract_features, modal_label, window_count, window_features};
pub use io::{read_feature_table, write_feature_table, META_COLUMNS};
pub use lag::add_lag_features;
pub use naming::{base_column_names, feature_name, Axis, Band, Family, Global};
pub use stats::{quantile_sorted, wavelet_features, window_statistics, WindowStats};
pub use window::{
    mean_vector_magnitude, movement_variation, orientation_angles, signal_magnitude_area,
    vector_magnitude, Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    /// Samples per window.
    pub window_length: usize,
    /// Samples between consecutive window starts.
    pub step_length: usize,
    /// Number of lagged copies of each base column.
    pub max_lag: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_length: 156,
            step_length: 39,
            max_lag: 5,
        }
    }
}

/// Window geometry plus the signal-processing knobs used per window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub window: WindowConfig,
    /// Savitzky-Golay window (odd); shrunk to fit shorter windows.
    pub sg_window: usize,
    pub sg_polyorder: usize,
    pub entropy_bins: usize,
    pub wavelet: Wavelet,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            window: WindowConfig::default(),
            sg_window: 11,
            sg_polyorder: 3,
            entropy_bins: crate::signal::DEFAULT_ENTROPY_BINS,
            wavelet: Wavelet::Db4,
        }
    }
}

/// Wavelet features use a fixed three-level decomposition.
pub const WAVELET_LEVELS: usize = 3;

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.window;
        let min = crate::signal::min_length(WAVELET_LEVELS);
        if w.window_length < min {
            return Err(Error::param(format!(
                "window length {} is below the {min} samples a {WAVELET_LEVELS}-level decomposition needs",
                w.window_length
            )));
        }
        if w.step_length == 0 || w.step_length > w.window_length {
            return Err(Error::param(format!(
                "step length must be in 1..={}, got {}",
                w.window_length, w.step_length
            )));
        }
        if self.sg_window == 0 || self.sg_window.is_multiple_of(2) {
            return Err(Error::param("Savitzky-Golay window must be odd and positive"));
        }
        if self.entropy_bins == 0 {
            return Err(Error::param("entropy bins must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMeta {
    pub device_id: String,
    pub timestamp_max: i64,
    pub label: Option<String>,
    /// Some feature was undefined (zero variance or zero mean gravity) and
    /// was emitted as 0.
    pub degenerate: bool,
}

/// Named feature columns per window row. Rows are kept in
/// `(device_id, timestamp_max)` order by the producers in this module.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub column_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub row_meta: Vec<RowMeta>,
}

impl FeatureTable {
    pub fn empty(column_names: Vec<String>) -> Self {
        FeatureTable {
            column_names,
            rows: Vec::new(),
            row_meta: Vec::new(),
        }
    }

    pub fn new(column_names: Vec<String>, rows: Vec<Vec<f64>>, row_meta: Vec<RowMeta>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, c) in column_names.iter().enumerate() {
            if let Some(prev) = seen.insert(c.as_str(), i) {
                return Err(Error::Schema {
                    path: "<feature table>".into(),
                    msg: format!("duplicate column {c:?} at positions {prev} and {i}"),
                });
            }
        }
        if rows.len() != row_meta.len() {
            return Err(Error::Structure(format!(
                "{} rows but {} metadata entries",
                rows.len(),
                row_meta.len()
            )));
        }
        let mut table = FeatureTable::empty(column_names);
        for (r, m) in rows.into_iter().zip(row_meta) {
            table.push_row(r, m)?;
        }
        Ok(table)
    }

    pub fn push_row(&mut self, values: Vec<f64>, meta: RowMeta) -> Result<()> {
        if values.len() != self.column_names.len() {
            return Err(Error::Structure(format!(
                "row has {} values, table has {} columns",
                values.len(),
                self.column_names.len()
            )));
        }
        self.rows.push(values);
        self.row_meta.push(meta);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name).ok_or_else(|| Error::Schema {
            path: "<feature table>".into(),
            msg: format!("no column named {name:?}"),
        })?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn labels(&self) -> Vec<Option<&str>> {
        self.row_meta.iter().map(|m| m.label.as_deref()).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            row_meta: indices.iter().map(|&i| self.row_meta[i].clone()).collect(),
        }
    }

    /// Rows grouped by device with strictly increasing `timestamp_max` inside
    /// each device, devices in ascending id order.
    pub fn check_row_order(&self) -> Result<()> {
        for (i, w) in self.row_meta.windows(2).enumerate() {
            let a = (&w[0].device_id, w[0].timestamp_max);
            let b = (&w[1].device_id, w[1].timestamp_max);
            if a >= b {
                return Err(Error::Ordering(format!(
                    "feature row {} ({}, {}) does not come after ({}, {})",
                    i + 1,
                    b.0,
                    b.1,
                    a.0,
                    a.1
                )));
            }
        }
        Ok(())
    }
}

/// Extraction followed by lag augmentation with `config.window.max_lag`.
pub fn build_feature_table(
    samples: &[crate::dataset::Sample],
    config: &ExtractConfig,
) -> Result<FeatureTable> {
    let base = extract_features(samples, config)?;
    add_lag_features(&base, config.window.max_lag)
}
