//! Sample ingestion and preparation.

mod clean;
mod csv_io;
pub mod labels;
pub mod packets;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

pub use clean::{clean, nominal_period, CleaningPolicy, CleaningReport};
pub use csv_io::{
    parse_samples, parse_samples_from_reader, write_rejects, write_samples, ParseOptions,
    ParsedSamples, RejectedRow, SAMPLE_HEADER,
};
pub use labels::{map_labels, Distribution, LabelMapping, CLASSES, RAW_CODES};
pub use packets::{replay_gateway, replay_gateway_file, ReplayReport};
pub use split::{grouped_split, stratified_split, Split, SplitRatios, MIN_ROWS_PER_CLASS};
pub use synth::{synth_generate, Regime, SynthConfig};

/// One timestamped tri-axial reading from a collar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub device_id: String,
    /// Epoch milliseconds.
    pub timestamp: i64,
    pub acc_x: f64,
    pub acc_y: f64,
    pub acc_z: f64,
    pub label: Option<String>,
}

impl Sample {
    pub fn key(&self) -> (&str, i64) {
        (&self.device_id, self.timestamp)
    }

    pub fn acc(&self) -> [f64; 3] {
        [self.acc_x, self.acc_y, self.acc_z]
    }
}
