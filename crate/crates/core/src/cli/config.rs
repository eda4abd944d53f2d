//! Plain-text `key = value` run configuration.
//!
//! Every key has a default; a config file and command-line flags are layered
//! on top (flags win). The effective configuration is rendered canonically
//! (sorted `key=value` lines) and its SHA-256 is the run's configuration
//! hash. Paths are not part of the configuration, so moving a run to another
//! directory keeps its hash.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dataset::{CleaningPolicy, LabelMapping, ParseOptions, SplitRatios, SynthConfig};
use crate::error::{Error, Result};
use crate::explain::{AttributionConfig, AttributionMode, StabilityThresholds, DEFAULT_ENUMERATION_CAP};
use crate::features::{ExtractConfig, WindowConfig};
use crate::models::{expand_grid, ModelKind, ModelSpec, ParamGrid, ParamValue};
use crate::signal::Wavelet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }
}

impl std::str::FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "validation" => Ok(Partition::Validation),
            "test" => Ok(Partition::Test),
            other => Err(Error::Config(format!("unknown partition {other:?} (train, validation, test)"))),
        }
    }
}

const DEFAULTS: &[(&str, &str)] = &[
    ("clean.clamp_g", "16"),
    ("clean.max_gap", "3"),
    ("cv.folds", "5"),
    ("explain.background", "100"),
    ("explain.enumeration_cap", "20"),
    ("explain.mode", "sampled"),
    ("explain.per_class", "25"),
    ("explain.permutations", "2"),
    ("explain.top_k", "10"),
    ("features.entropy_bins", "10"),
    ("features.max_lag", "5"),
    ("features.sg_polyorder", "3"),
    ("features.sg_window", "11"),
    ("features.wavelet", "db4"),
    ("grid.gradient_boosting.learning_rate", "0.1"),
    ("grid.gradient_boosting.max_depth", "7"),
    ("grid.gradient_boosting.n_estimators", "200"),
    ("grid.gradient_boosting.reg_alpha", "0.1"),
    ("grid.gradient_boosting.reg_lambda", "0.01"),
    ("grid.knn.n_neighbors", "3|5"),
    ("grid.knn.p", "1|2"),
    ("grid.knn.weights", "distance"),
    ("grid.random_forest.max_depth", "None|30"),
    ("grid.random_forest.min_samples_split", "2"),
    ("grid.random_forest.n_estimators", "100|200"),
    ("ingest.base_timestamp", "0"),
    ("ingest.device_id", "device-0"),
    ("ingest.period_ms", "100"),
    ("models", "knn,random_forest,gradient_boosting"),
    ("refit.include_validation", "false"),
    ("split.mode", "stratified"),
    ("split.test", "0.2"),
    ("split.train", "0.6"),
    ("split.validation", "0.2"),
    ("stability.compare", "train,test"),
    ("stability.stable_below", "0.2"),
    ("stability.top_features", "10"),
    ("stability.unstable_above", "0.45"),
    ("synth.devices", "4"),
    ("synth.samples_per_device", "72000"),
    ("synth.sample_rate_hz", "10"),
    ("windows", "156/39,316/79"),
];

/// Keys accepted besides the defaults: `seed` and per-code `mapping.<CODE>`.
fn is_known(key: &str) -> bool {
    key == "seed"
        || key.strip_prefix("mapping.").is_some_and(|c| !c.is_empty())
        || DEFAULTS.iter().any(|(k, _)| *k == key)
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
            path: origin.to_string(),
            line: Some(i as u64 + 1),
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !is_known(k) {
            return Err(Error::Config(format!("{origin} line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

/// Effective configuration after layering defaults, file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// `file` then `flags` over the defaults. A seed must come from one of
    /// them.
    pub fn layered(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in file.into_iter().chain(flags) {
            if !is_known(&k) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
            values.insert(k, v);
        }
        if !values.contains_key("seed") {
            return Err(Error::Config("a seed is required: pass --seed or set seed in the config".into()));
        }
        let cfg = RunConfig { values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: Option<&Path>, flags: BTreeMap<String, String>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_config_text(&text, &p.display().to_string())?
            }
            None => BTreeMap::new(),
        };
        RunConfig::layered(file, flags)
    }

    /// Parses every typed view once so errors surface before any work.
    fn validate(&self) -> Result<()> {
        self.seed()?;
        self.windows()?;
        self.extract_config(self.windows()?[0])?.validate()?;
        self.cleaning()?;
        self.mapping()?;
        self.split_ratios()?.validate()?;
        self.split_mode()?;
        self.folds()?;
        self.grid()?;
        self.include_validation()?;
        self.attribution()?;
        self.background_size()?;
        self.stability_thresholds()?.validate()?;
        self.stability_top_features()?;
        self.stability_compare()?;
        self.parse_options()?;
        self.synth()?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("{key} = {:?} is not valid", self.get(key))))
    }

    /// Sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Hex SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse("seed")
    }

    /// `(window, step)` pairs from `windows = 156/39,316/79`.
    pub fn windows(&self) -> Result<Vec<(usize, usize)>> {
        let raw = self.get("windows");
        let mut out = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (w, s) = part
                .split_once('/')
                .ok_or_else(|| Error::Config(format!("windows entry {part:?} is not WINDOW/STEP")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("windows entry {part:?} is not WINDOW/STEP")))
            };
            let pair = (parse(w)?, parse(s)?);
            if out.contains(&pair) {
                return Err(Error::Config(format!("windows lists {part} twice")));
            }
            out.push(pair);
        }
        if out.is_empty() {
            return Err(Error::Config("windows must list at least one WINDOW/STEP pair".into()));
        }
        Ok(out)
    }

    pub fn extract_config(&self, (window_length, step_length): (usize, usize)) -> Result<ExtractConfig> {
        let cfg = ExtractConfig {
            window: WindowConfig {
                window_length,
                step_length,
                max_lag: self.parse("features.max_lag")?,
            },
            sg_window: self.parse("features.sg_window")?,
            sg_polyorder: self.parse("features.sg_polyorder")?,
            entropy_bins: self.parse("features.entropy_bins")?,
            wavelet: self.parse::<Wavelet>("features.wavelet")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cleaning(&self) -> Result<CleaningPolicy> {
        Ok(CleaningPolicy {
            max_interpolated_gap: self.parse("clean.max_gap")?,
            clamp_g: self.parse("clean.clamp_g")?,
            period_ms: None,
        })
    }

    pub fn mapping(&self) -> Result<LabelMapping> {
        let mut m = LabelMapping::default();
        for (k, v) in &self.values {
            if let Some(code) = k.strip_prefix("mapping.") {
                m.set(code, v)?;
            }
        }
        Ok(m)
    }

    pub fn parse_options(&self) -> Result<ParseOptions> {
        Ok(ParseOptions {
            device_id: self.get("ingest.device_id").to_string(),
            base_timestamp: self.parse("ingest.base_timestamp")?,
            period_ms: self.parse("ingest.period_ms")?,
        })
    }

    pub fn split_ratios(&self) -> Result<SplitRatios> {
        Ok(SplitRatios {
            train: self.parse("split.train")?,
            validation: self.parse("split.validation")?,
            test: self.parse("split.test")?,
        })
    }

    /// `true` for device-grouped splitting.
    pub fn split_mode(&self) -> Result<bool> {
        match self.get("split.mode") {
            "stratified" => Ok(false),
            "grouped" => Ok(true),
            other => Err(Error::Config(format!("split.mode must be stratified or grouped, got {other:?}"))),
        }
    }

    pub fn folds(&self) -> Result<usize> {
        let k: usize = self.parse("cv.folds")?;
        if k < 2 {
            return Err(Error::Config("cv.folds must be at least 2".into()));
        }
        Ok(k)
    }

    pub fn include_validation(&self) -> Result<bool> {
        self.parse("refit.include_validation")
    }

    /// Candidate specs per model kind, in `models` order.
    pub fn grid(&self) -> Result<Vec<ModelSpec>> {
        let mut specs = Vec::new();
        for name in self.get("models").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: ModelKind = name.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let prefix = format!("grid.{}.", kind.as_str());
            let mut grid = ParamGrid::new();
            for (k, v) in &self.values {
                if let Some(param) = k.strip_prefix(&prefix) {
                    let values = v
                        .split('|')
                        .map(|x| x.parse::<ParamValue>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::Config(format!("{k}: {e}")))?;
                    grid.insert(param.to_string(), values);
                }
            }
            specs.extend(expand_grid(kind, &grid).map_err(|e| Error::Config(e.to_string()))?);
        }
        if specs.is_empty() {
            return Err(Error::Config("models must name at least one model kind".into()));
        }
        Ok(specs)
    }

    pub fn attribution(&self) -> Result<AttributionConfig> {
        let mode = match self.get("explain.mode") {
            "exact" => AttributionMode::Exact,
            "sampled" => AttributionMode::Sampled {
                n_permutations: self.parse("explain.permutations")?,
            },
            other => return Err(Error::Config(format!("explain.mode must be exact or sampled, got {other:?}"))),
        };
        let cap: usize = self.parse("explain.enumeration_cap")?;
        Ok(AttributionConfig {
            per_class: self.parse("explain.per_class")?,
            mode,
            seed: self.seed()?,
            enumeration_cap: if cap == 0 { DEFAULT_ENUMERATION_CAP } else { cap },
            top_k: self.parse("explain.top_k")?,
        })
    }

    pub fn background_size(&self) -> Result<usize> {
        self.parse("explain.background")
    }

    pub fn stability_thresholds(&self) -> Result<StabilityThresholds> {
        Ok(StabilityThresholds {
            stable_below: self.parse("stability.stable_below")?,
            unstable_above: self.parse("stability.unstable_above")?,
        })
    }

    pub fn stability_top_features(&self) -> Result<usize> {
        self.parse("stability.top_features")
    }

    /// The two split partitions whose marginals the KS test compares.
    pub fn stability_compare(&self) -> Result<(Partition, Partition)> {
        let raw = self.get("stability.compare");
        let bad = || Error::Config(format!("stability.compare must name two different partitions, got {raw:?}"));
        let (a, b) = raw.split_once(',').ok_or_else(bad)?;
        let (a, b): (Partition, Partition) = (a.trim().parse()?, b.trim().parse()?);
        if a == b {
            return Err(bad());
        }
        Ok((a, b))
    }

    pub fn synth(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            devices: self.parse("synth.devices")?,
            samples_per_device: self.parse("synth.samples_per_device")?,
            sample_rate_hz: self.parse("synth.sample_rate_hz")?,
            ..SynthConfig::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded() -> BTreeMap<String, String> {
        BTreeMap::from([("seed".to_string(), "7".to_string())])
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(
            RunConfig::layered(BTreeMap::new(), BTreeMap::new()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("# run\nwindows = 316/79\nseed = 1\n", "cfg").unwrap();
        let cfg = RunConfig::layered(file, seeded()).unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.windows().unwrap(), vec![(316, 79)]);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config_text("colour = blue", "cfg").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::layered(BTreeMap::new(), seeded()).unwrap();
        let b = RunConfig::layered(BTreeMap::new(), seeded()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut flags = seeded();
        flags.insert("cv.folds".into(), "3".into());
        let c = RunConfig::layered(BTreeMap::new(), flags).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn default_grid_expands() {
        let cfg = RunConfig::layered(BTreeMap::new(), seeded()).unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.iter().filter(|s| s.kind == ModelKind::Knn).count(), 4);
        assert_eq!(grid.len(), 4 + 4 + 1);
    }

    #[test]
    fn mapping_override_keys() {
        let mut flags = seeded();
        flags.insert("mapping.MOV".into(), "ETC".into());
        let cfg = RunConfig::layered(BTreeMap::new(), flags).unwrap();
        assert_eq!(cfg.mapping().unwrap().get("MOV"), Some("ETC"));
    }

    #[test]
    fn stability_partitions() {
        let cfg = RunConfig::layered(BTreeMap::new(), seeded()).unwrap();
        assert_eq!(cfg.stability_compare().unwrap(), (Partition::Train, Partition::Test));
        for bad in ["train,train", "train", "train,holdout"] {
            let mut flags = seeded();
            flags.insert("stability.compare".into(), bad.into());
            assert!(matches!(RunConfig::layered(BTreeMap::new(), flags), Err(Error::Config(_))), "{bad}");
        }
    }
}
