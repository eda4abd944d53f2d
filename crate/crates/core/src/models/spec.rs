//! Model kinds, hyperparameter values and their documented grids.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    RandomForest,
    GradientBoosting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Knn, ModelKind::RandomForest, ModelKind::GradientBoosting];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
        }
    }

    /// Display name used in reports.
    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Knn => "KNN",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::GradientBoosting => "Gradient Boosting",
        }
    }

    /// Accepted hyperparameter names and their defaults.
    pub fn defaults(self) -> Hyperparameters {
        let entries: Vec<(&str, ParamValue)> = match self {
            ModelKind::Knn => vec![
                ("n_neighbors", ParamValue::Int(3)),
                ("p", ParamValue::Int(1)),
                ("weights", ParamValue::Text("distance".into())),
            ],
            ModelKind::RandomForest => vec![
                ("n_estimators", ParamValue::Int(100)),
                ("max_depth", ParamValue::None),
                ("min_samples_split", ParamValue::Int(2)),
                ("max_features", ParamValue::Text("sqrt".into())),
                ("bootstrap", ParamValue::Bool(true)),
            ],
            ModelKind::GradientBoosting => vec![
                ("learning_rate", ParamValue::Float(0.1)),
                ("max_depth", ParamValue::Int(7)),
                ("n_estimators", ParamValue::Int(200)),
                ("reg_alpha", ParamValue::Float(0.1)),
                ("reg_lambda", ParamValue::Float(0.01)),
                ("min_child_weight", ParamValue::Float(1.0)),
                ("max_bins", ParamValue::Int(255)),
            ],
        };
        entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" | "k_nearest_neighbors" => Ok(ModelKind::Knn),
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "gradient_boosting" | "gbt" | "gbdt" => Ok(ModelKind::GradientBoosting),
            other => Err(Error::param(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Total order used to pick the lexicographically smallest parameter
    /// tuple: None < bools < numbers (numerically) < text.
    pub fn total_cmp(&self, other: &ParamValue) -> Ordering {
        fn rank(v: &ParamValue) -> u8 {
            match v {
                ParamValue::None => 0,
                ParamValue::Bool(_) => 1,
                ParamValue::Int(_) | ParamValue::Float(_) => 2,
                ParamValue::Text(_) => 3,
            }
        }
        match (self, other) {
            (ParamValue::Bool(a), ParamValue::Bool(b)) => a.cmp(b),
            (ParamValue::Text(a), ParamValue::Text(b)) => a.cmp(b),
            (a, b) if rank(a) == 2 && rank(b) == 2 => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::None => f.write_str("None"),
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

impl FromStr for ParamValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "None" | "none" | "null" => ParamValue::None,
            "true" => ParamValue::Bool(true),
            "false" => ParamValue::Bool(false),
            _ => {
                if let Ok(i) = s.parse::<i64>() {
                    ParamValue::Int(i)
                } else if let Ok(x) = s.parse::<f64>() {
                    ParamValue::Float(x)
                } else if s.is_empty() {
                    return Err(Error::param("empty hyperparameter value"));
                } else {
                    ParamValue::Text(s.to_string())
                }
            }
        })
    }
}

pub type Hyperparameters = BTreeMap<String, ParamValue>;

/// A model configuration: kind, hyperparameters and the window geometry of
/// the features it was (or will be) trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub window_length: Option<usize>,
    pub step_length: Option<usize>,
}

impl ModelSpec {
    /// Spec with `overrides` applied on top of the kind's defaults. Unknown
    /// names are rejected.
    pub fn new(kind: ModelKind, overrides: Hyperparameters) -> Result<Self> {
        let mut hyperparameters = kind.defaults();
        for (name, value) in overrides {
            if !hyperparameters.contains_key(&name) {
                return Err(Error::param(format!(
                    "{kind} has no hyperparameter {name:?} (accepted: {})",
                    kind.defaults().keys().cloned().collect::<Vec<_>>().join(", ")
                )));
            }
            hyperparameters.insert(name, value);
        }
        Ok(ModelSpec {
            kind,
            hyperparameters,
            window_length: None,
            step_length: None,
        })
    }

    pub fn with_window(mut self, window_length: usize, step_length: usize) -> Self {
        self.window_length = Some(window_length);
        self.step_length = Some(step_length);
        self
    }

    fn get(&self, name: &str) -> Result<&ParamValue> {
        self.hyperparameters
            .get(name)
            .ok_or_else(|| Error::param(format!("{} spec lacks {name:?}", self.kind)))
    }

    pub fn usize_param(&self, name: &str) -> Result<usize> {
        match self.get(name)? {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Error::param(format!("{name} must be a non-negative integer, got {other}"))),
        }
    }

    pub fn optional_usize_param(&self, name: &str) -> Result<Option<usize>> {
        match self.get(name)? {
            ParamValue::None => Ok(None),
            _ => self.usize_param(name).map(Some),
        }
    }

    pub fn f64_param(&self, name: &str) -> Result<f64> {
        self.get(name)?
            .as_f64()
            .ok_or_else(|| Error::param(format!("{name} must be numeric")))
    }

    pub fn text_param(&self, name: &str) -> Result<String> {
        Ok(self.get(name)?.to_string())
    }

    pub fn bool_param(&self, name: &str) -> Result<bool> {
        match self.get(name)? {
            ParamValue::Bool(b) => Ok(*b),
            other => Err(Error::param(format!("{name} must be true or false, got {other}"))),
        }
    }

    /// `name: value` pairs joined by `, `, in name order.
    pub fn params_string(&self) -> String {
        self.hyperparameters
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// e.g. `KNN (156/39)`.
    pub fn label(&self) -> String {
        match (self.window_length, self.step_length) {
            (Some(w), Some(s)) => format!("{} ({w}/{s})", self.kind.title()),
            _ => self.kind.title().to_string(),
        }
    }

    /// Lexicographic comparison of the parameter values in name order, then
    /// window and step.
    pub fn tuple_cmp(&self, other: &ModelSpec) -> Ordering {
        let a = self.hyperparameters.values();
        let b = other.hyperparameters.values();
        for (x, y) in a.zip(b) {
            let o = x.total_cmp(y);
            if o != Ordering::Equal {
                return o;
            }
        }
        (self.kind, self.window_length, self.step_length).cmp(&(
            other.kind,
            other.window_length,
            other.step_length,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_values() {
        assert_eq!("3".parse::<ParamValue>().unwrap(), ParamValue::Int(3));
        assert_eq!("0.1".parse::<ParamValue>().unwrap(), ParamValue::Float(0.1));
        assert_eq!("None".parse::<ParamValue>().unwrap(), ParamValue::None);
        assert_eq!(
            "distance".parse::<ParamValue>().unwrap(),
            ParamValue::Text("distance".into())
        );
    }

    #[test]
    fn unknown_hyperparameter_rejected() {
        let mut o = Hyperparameters::new();
        o.insert("gamma".into(), ParamValue::Float(1.0));
        assert!(ModelSpec::new(ModelKind::GradientBoosting, o).is_err());
    }

    #[test]
    fn published_knn_config() {
        let spec = ModelSpec::new(ModelKind::Knn, Hyperparameters::new())
            .unwrap()
            .with_window(156, 39);
        assert_eq!(spec.params_string(), "n_neighbors: 3, p: 1, weights: distance");
        assert_eq!(spec.label(), "KNN (156/39)");
    }

    #[test]
    fn serde_round_trip() {
        let spec = ModelSpec::new(ModelKind::RandomForest, Hyperparameters::new()).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
