//! Stratified train / validation / test partitioning of feature rows.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::labels::label_rank;
use crate::error::{Error, Result};
use crate::features::FeatureTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.as_array();
        if r.iter().any(|v| !v.is_finite() || *v < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!(
                "split ratios must be non-negative and sum to 1, got {r:?}"
            )));
        }
        Ok(())
    }
}

/// Row indices of each partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub const MIN_ROWS_PER_CLASS: usize = 3;

/// Largest-remainder apportionment of `n` over `ratios`, then every non-zero
/// ratio gets at least one row when `n` allows it.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    for i in 0..3 {
        if counts[i] == 0 && ratios[i] > 0.0 {
            let donor = (0..3).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            if counts[donor] > 1 {
                counts[donor] -= 1;
                counts[i] += 1;
            }
        }
    }
    counts
}

fn rows_by_class(table: &FeatureTable) -> Result<BTreeMap<(usize, String), Vec<usize>>> {
    let mut by_class: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
    for (i, meta) in table.row_meta.iter().enumerate() {
        let label = meta.label.as_deref().ok_or_else(|| {
            Error::Evaluation(format!("row {i} ({}, {}) is unlabeled", meta.device_id, meta.timestamp_max))
        })?;
        let (rank, rest) = label_rank(label);
        by_class
            .entry((rank, rest.to_string()))
            .or_default()
            .push(i);
    }
    Ok(by_class)
}

/// Row-level stratified split: each class is shuffled with a seeded RNG and
/// apportioned to the three partitions so per-class counts stay within one
/// row of the exact ratio.
pub fn stratified_split(table: &FeatureTable, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for ((_, _), mut rows) in rows_by_class(table)? {
        let label = table.row_meta[rows[0]].label.clone().unwrap_or_default();
        if rows.len() < MIN_ROWS_PER_CLASS {
            return Err(Error::Split {
                class: label,
                count: rows.len(),
                min: MIN_ROWS_PER_CLASS,
            });
        }
        rows.shuffle(&mut rng);
        let [a, b, _] = apportion(rows.len(), ratios.as_array());
        split.train.extend_from_slice(&rows[..a]);
        split.validation.extend_from_slice(&rows[a..a + b]);
        split.test.extend_from_slice(&rows[a + b..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Device-grouped split: whole devices are assigned to partitions (shuffled,
/// greedily filled up to each ratio's share of rows) so no animal appears in
/// two partitions. Class ratios are only approximately preserved.
pub fn grouped_split(table: &FeatureTable, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    let mut devices: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, meta) in table.row_meta.iter().enumerate() {
        devices.entry(meta.device_id.as_str()).or_default().push(i);
    }
    if devices.len() < 3 {
        return Err(Error::param(format!(
            "device-grouped split needs at least 3 devices, found {}",
            devices.len()
        )));
    }
    let mut groups: Vec<Vec<usize>> = devices.into_values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let total = table.n_rows() as f64;
    let targets = ratios.as_array().map(|r| r * total);
    let mut parts: [Vec<usize>; 3] = Default::default();
    // Seed each partition with one device, then fill the most under-served.
    for (p, group) in groups.drain(..3).enumerate() {
        parts[p].extend(group);
    }
    for group in groups {
        let p = (0..3)
            .max_by(|&a, &b| {
                let da = targets[a] - parts[a].len() as f64;
                let db = targets[b] - parts[b].len() as f64;
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        parts[p].extend(group);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(Split {
        train,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_sums_and_minimums() {
        assert_eq!(apportion(150, [0.6, 0.2, 0.2]), [90, 30, 30]);
        assert_eq!(apportion(3, [0.6, 0.2, 0.2]), [1, 1, 1]);
        for n in 3..200 {
            let c = apportion(n, [0.6, 0.2, 0.2]);
            assert_eq!(c.iter().sum::<usize>(), n);
            for (k, r) in c.iter().zip([0.6, 0.2, 0.2]) {
                assert!((*k as f64 - r * n as f64).abs() <= 1.0, "n={n} {c:?}");
            }
        }
    }
}
