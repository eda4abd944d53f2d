//! Activity code vocabularies and the merge onto the four working classes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::Sample;
use crate::error::{Error, Result};

/// Observed behaviour codes, in descending order of collected volume.
pub const RAW_CODES: [&str; 10] = [
    "RES", "RUS", "REL", "FEP", "MOV", "LCK", "ATT", "DEF", "DRN", "URI",
];

/// Merged classes. This order is the fixed vocabulary order used to break
/// ties (e.g. the modal label of a window).
pub const CLASSES: [&str; 4] = ["STN", "REL", "RUS", "ETC"];

/// Sort key placing merged classes first, then raw codes, then anything else
/// lexicographically.
pub fn label_rank(label: &str) -> (usize, &str) {
    if let Some(i) = CLASSES.iter().position(|c| *c == label) {
        return (i, "");
    }
    if let Some(i) = RAW_CODES.iter().position(|c| *c == label) {
        return (CLASSES.len() + i, "");
    }
    (CLASSES.len() + RAW_CODES.len(), label)
}

pub fn sort_labels(labels: &mut [String]) {
    labels.sort_by(|a, b| label_rank(a).cmp(&label_rank(b)));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    pairs: BTreeMap<String, String>,
}

impl Default for LabelMapping {
    /// RES, MOV → STN; RUS → RUS; REL → REL; FEP, LCK, ATT, DEF, DRN, URI → ETC.
    /// Already-merged STN and ETC map to themselves so mapping is idempotent.
    fn default() -> Self {
        let mut pairs = BTreeMap::new();
        for (old, new) in [
            ("RES", "STN"),
            ("MOV", "STN"),
            ("RUS", "RUS"),
            ("REL", "REL"),
            ("FEP", "ETC"),
            ("LCK", "ETC"),
            ("ATT", "ETC"),
            ("DEF", "ETC"),
            ("DRN", "ETC"),
            ("URI", "ETC"),
            ("STN", "STN"),
            ("ETC", "ETC"),
        ] {
            pairs.insert(old.to_string(), new.to_string());
        }
        LabelMapping { pairs }
    }
}

impl LabelMapping {
    pub fn get(&self, code: &str) -> Option<&str> {
        self.pairs.get(code).map(String::as_str)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Sets `old → new`. `new` must be one of the merged classes.
    pub fn set(&mut self, old: &str, new: &str) -> Result<()> {
        if !CLASSES.contains(&new) {
            return Err(Error::Config(format!(
                "mapping target {new:?} for {old:?} is not one of {}",
                CLASSES.join(", ")
            )));
        }
        self.pairs.insert(old.to_string(), new.to_string());
        Ok(())
    }

    /// Applies `OLD=NEW` lines (blank lines and `#` comments ignored) on top
    /// of `self`.
    pub fn merge_override_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (old, new) = line.split_once('=').ok_or_else(|| Error::Format {
                path: origin.to_string(),
                line: Some(i as u64 + 1),
                msg: format!("expected OLD=NEW, got {line:?}"),
            })?;
            self.set(old.trim(), new.trim())?;
        }
        Ok(())
    }

    pub fn merge_override_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.merge_override_text(&text, &path.display().to_string())
    }
}

/// Class counts with percentages, in vocabulary order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Distribution {
    pub counts: Vec<(String, usize)>,
    pub unlabeled: usize,
}

impl Distribution {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = Option<&'a str>>) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut unlabeled = 0;
        for label in labels {
            match label {
                Some(l) => *counts.entry(l.to_string()).or_default() += 1,
                None => unlabeled += 1,
            }
        }
        let mut counts: Vec<(String, usize)> = counts.into_iter().collect();
        counts.sort_by(|a, b| label_rank(&a.0).cmp(&label_rank(&b.0)));
        Distribution { counts, unlabeled }
    }

    pub fn labeled_total(&self) -> usize {
        self.counts.iter().map(|(_, c)| c).sum()
    }

    pub fn percentage(&self, label: &str) -> Option<f64> {
        let total = self.labeled_total();
        self.counts
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| 100.0 * *c as f64 / total as f64)
    }

    /// Tab-separated `class  count  percent` rows, percent to two decimals
    /// (e.g. `STN 34.98%`).
    pub fn render(&self) -> String {
        let total = self.labeled_total();
        let mut out = String::from("class\tcount\tpercent\n");
        for (label, count) in &self.counts {
            let pct = if total == 0 {
                0.0
            } else {
                100.0 * *count as f64 / total as f64
            };
            let _ = writeln!(out, "{label}\t{count}\t{pct:.2}%");
        }
        if self.unlabeled > 0 {
            let _ = writeln!(out, "(unlabeled)\t{}\t-", self.unlabeled);
        }
        out
    }
}

/// Replaces every label through `mapping`. Unlabeled samples pass through.
pub fn map_labels(samples: &[Sample], mapping: &LabelMapping) -> Result<(Vec<Sample>, Distribution)> {
    let mut unknown: Vec<String> = samples
        .iter()
        .filter_map(|s| s.label.as_deref())
        .filter(|l| mapping.get(l).is_none())
        .map(str::to_string)
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::Mapping { codes: unknown });
    }
    let mapped: Vec<Sample> = samples
        .iter()
        .map(|s| Sample {
            label: s
                .label
                .as_deref()
                .and_then(|l| mapping.get(l))
                .map(str::to_string),
            ..s.clone()
        })
        .collect();
    let dist = Distribution::from_labels(mapped.iter().map(|s| s.label.as_deref()));
    Ok((mapped, dist))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(label: &str) -> Sample {
        Sample {
            device_id: "d".into(),
            timestamp: 0,
            acc_x: 0.0,
            acc_y: 0.0,
            acc_z: 1.0,
            label: Some(label.into()),
        }
    }

    #[test]
    fn default_mapping_merges_classes() {
        let m = LabelMapping::default();
        assert_eq!(m.get("RES"), Some("STN"));
        assert_eq!(m.get("MOV"), Some("STN"));
        assert_eq!(m.get("RUS"), Some("RUS"));
        assert_eq!(m.get("REL"), Some("REL"));
        for code in ["FEP", "LCK", "ATT", "DEF", "DRN", "URI"] {
            assert_eq!(m.get(code), Some("ETC"), "{code}");
        }
        for code in RAW_CODES {
            assert!(CLASSES.contains(&m.get(code).unwrap()));
        }
    }

    #[test]
    fn unknown_codes_are_listed() {
        let samples = vec![sample("RES"), sample("XYZ"), sample("ABC"), sample("XYZ")];
        match map_labels(&samples, &LabelMapping::default()) {
            Err(Error::Mapping { codes }) => assert_eq!(codes, vec!["ABC", "XYZ"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mapping_preserves_identity_and_counts() {
        let samples: Vec<Sample> = ["RES", "MOV", "DRN", "REL"]
            .iter()
            .enumerate()
            .map(|(i, l)| Sample {
                timestamp: i as i64,
                ..sample(l)
            })
            .collect();
        let (mapped, dist) = map_labels(&samples, &LabelMapping::default()).unwrap();
        assert_eq!(mapped.len(), samples.len());
        for (a, b) in samples.iter().zip(&mapped) {
            assert_eq!((&a.device_id, a.timestamp), (&b.device_id, b.timestamp));
        }
        assert_eq!(
            dist.counts,
            vec![("STN".into(), 2), ("REL".into(), 1), ("ETC".into(), 1)]
        );
        assert_eq!(dist.percentage("STN"), Some(50.0));
    }

    #[test]
    fn override_text() {
        let mut m = LabelMapping::default();
        m.merge_override_text("# move is its own thing\nMOV = ETC\n\n", "x")
            .unwrap();
        assert_eq!(m.get("MOV"), Some("ETC"));
        assert!(m.merge_override_text("MOV=WALK", "x").is_err());
        assert!(m.merge_override_text("MOV", "x").is_err());
    }

    #[test]
    fn render_shape() {
        let labels = ["STN", "STN", "RUS"];
        let dist = Distribution::from_labels(labels.iter().map(|l| Some(*l)));
        assert_eq!(
            dist.render(),
            "class\tcount\tpercent\nSTN\t2\t66.67%\nRUS\t1\t33.33%\n"
        );
    }
}
