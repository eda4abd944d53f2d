//! Classifiers (KNN, random forest, gradient-boosted trees), evaluation
//! metrics and cross-validated grid search.
//!
//! A fitted model is stored as a [`ModelArtifact`], serialized as JSON with
//! the `format` field set to [`ARTIFACT_FORMAT`]. The artifact embeds the
//! spec it was trained from, the ordered class vocabulary and the ordered
//! feature names; prediction refuses tables whose columns differ.

mod cv;
pub mod forest;
pub mod gbt;
pub mod knn;
mod metrics;
mod spec;
pub mod tree;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::labels::sort_labels;
use crate::error::{Error, Result};
use crate::features::FeatureTable;

pub use cv::{
    cross_validate, expand_grid, grid_search, stratified_kfold, CvResult, GridCandidate,
    GridSearchResult, MeanStd, ParamGrid,
};
pub use gbt::leaf_weight;
pub use knn::minkowski_distance;
pub use metrics::{argmax, binary_auc, classification_metrics, roc_auc_ovr, Metrics};
pub use spec::{Hyperparameters, ModelKind, ModelSpec, ParamValue};

use forest::{ForestParams, RandomForest};
use gbt::{GbtParams, GradientBoosting};
use knn::{KnnModel, Weighting};
use tree::{MaxFeatures, TreeParams};

pub const ARTIFACT_FORMAT: &str = "herdwatch-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedModel {
    Knn(KnnModel),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub spec: ModelSpec,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub model: FittedModel,
}

/// Distinct labels of `table` in vocabulary order.
pub fn class_vocabulary(table: &FeatureTable) -> Result<Vec<String>> {
    let mut classes: Vec<String> = Vec::new();
    for (i, m) in table.row_meta.iter().enumerate() {
        let label = m
            .label
            .as_ref()
            .ok_or_else(|| Error::Evaluation(format!("row {i} ({}, {}) is unlabeled", m.device_id, m.timestamp_max)))?;
        if !classes.contains(label) {
            classes.push(label.clone());
        }
    }
    sort_labels(&mut classes);
    Ok(classes)
}

/// Class indices of every row of `table` under `classes`.
pub fn encode_labels(table: &FeatureTable, classes: &[String]) -> Result<Vec<usize>> {
    table
        .row_meta
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let label = m.label.as_ref().ok_or_else(|| {
                Error::Evaluation(format!("row {i} ({}, {}) is unlabeled", m.device_id, m.timestamp_max))
            })?;
            classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::Evaluation(format!("label {label:?} is not in the model vocabulary {classes:?}")))
        })
        .collect()
}

fn max_features(spec: &ModelSpec) -> Result<MaxFeatures> {
    match spec.hyperparameters.get("max_features") {
        Some(ParamValue::Text(t)) if t == "sqrt" => Ok(MaxFeatures::Sqrt),
        Some(ParamValue::Text(t)) if t == "all" => Ok(MaxFeatures::All),
        Some(ParamValue::None) => Ok(MaxFeatures::All),
        Some(ParamValue::Int(k)) if *k > 0 => Ok(MaxFeatures::Count(*k as usize)),
        other => Err(Error::param(format!(
            "max_features must be sqrt, all, None or a positive integer, got {other:?}"
        ))),
    }
}

impl ModelArtifact {
    /// Fits `spec` on every row of `table`; labels are encoded against
    /// `classes`. `seed` drives the forest's bootstrap and feature sampling.
    pub fn fit(spec: &ModelSpec, table: &FeatureTable, classes: &[String], seed: u64) -> Result<Self> {
        let y = encode_labels(table, classes)?;
        let x = &table.rows;
        let k = classes.len();
        let model = match spec.kind {
            ModelKind::Knn => {
                let weighting = match spec.text_param("weights")?.as_str() {
                    "distance" => Weighting::Distance,
                    "uniform" => Weighting::Uniform,
                    other => return Err(Error::param(format!("weights must be distance or uniform, got {other}"))),
                };
                FittedModel::Knn(KnnModel::fit(
                    x,
                    &y,
                    k,
                    spec.usize_param("n_neighbors")?,
                    spec.f64_param("p")?,
                    weighting,
                    true,
                )?)
            }
            ModelKind::RandomForest => {
                let params = ForestParams {
                    n_estimators: spec.usize_param("n_estimators")?,
                    tree: TreeParams {
                        max_depth: spec.optional_usize_param("max_depth")?,
                        min_samples_split: spec.usize_param("min_samples_split")?.max(2),
                        max_features: max_features(spec)?,
                    },
                    bootstrap: spec.bool_param("bootstrap")?,
                };
                FittedModel::RandomForest(RandomForest::fit(x, &y, k, &params, seed)?)
            }
            ModelKind::GradientBoosting => {
                let params = GbtParams {
                    learning_rate: spec.f64_param("learning_rate")?,
                    max_depth: spec.usize_param("max_depth")?,
                    n_estimators: spec.usize_param("n_estimators")?,
                    reg_alpha: spec.f64_param("reg_alpha")?,
                    reg_lambda: spec.f64_param("reg_lambda")?,
                    min_child_weight: spec.f64_param("min_child_weight")?,
                    max_bins: spec.usize_param("max_bins")?,
                };
                FittedModel::GradientBoosting(GradientBoosting::fit(x, &y, k, &params)?)
            }
        };
        Ok(ModelArtifact {
            format: ARTIFACT_FORMAT.to_string(),
            spec: spec.clone(),
            classes: classes.to_vec(),
            feature_names: table.column_names.clone(),
            model,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Class distribution for one row in `feature_names` order.
    ///
    /// # Panics
    /// If `row` has the wrong length.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        assert_eq!(row.len(), self.n_features(), "feature count mismatch");
        match &self.model {
            FittedModel::Knn(m) => m.predict_proba(row),
            FittedModel::RandomForest(m) => m.predict_proba(row),
            FittedModel::GradientBoosting(m) => m.predict_proba(row),
        }
    }

    pub fn check_columns(&self, table: &FeatureTable) -> Result<()> {
        if table.column_names != self.feature_names {
            let first = self
                .feature_names
                .iter()
                .zip(&table.column_names)
                .position(|(a, b)| a != b)
                .unwrap_or(self.feature_names.len().min(table.n_cols()));
            return Err(Error::Schema {
                path: "<feature table>".into(),
                msg: format!(
                    "model expects {} features, table has {}; first difference at column {first}",
                    self.n_features(),
                    table.n_cols()
                ),
            });
        }
        Ok(())
    }

    /// Probabilities for every row, in row order.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<Vec<f64>>> {
        self.check_columns(table)?;
        Ok(table.rows.par_iter().map(|r| self.predict_proba(r)).collect())
    }

    /// Metrics on the labeled rows of `table`. AUC is left empty when some
    /// class lacks positives or negatives.
    pub fn evaluate(&self, table: &FeatureTable) -> Result<Metrics> {
        let truth = encode_labels(table, &self.classes)?;
        let probs = self.predict_table(table)?;
        let predicted: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        let mut m = classification_metrics(&truth, &predicted, self.classes.len())?;
        m.auc_ovr_macro = roc_auc_ovr(&probs, &truth, self.classes.len()).ok();
        Ok(m)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self).map_err(|e| Error::Model(format!("serializing model: {e}")))
    }

    pub fn read_json<R: Read>(reader: R, origin: &str) -> Result<Self> {
        let artifact: ModelArtifact = serde_json::from_reader(reader).map_err(|e| Error::Format {
            path: origin.to_string(),
            line: Some(e.line() as u64),
            msg: e.to_string(),
        })?;
        if artifact.format != ARTIFACT_FORMAT {
            return Err(Error::Format {
                path: origin.to_string(),
                line: None,
                msg: format!("unsupported model format {:?}, expected {ARTIFACT_FORMAT:?}", artifact.format),
            });
        }
        Ok(artifact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RowMeta;

    fn table() -> FeatureTable {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let meta = (0..20)
            .map(|i| RowMeta {
                device_id: "d".into(),
                timestamp_max: i,
                label: Some(if i < 10 { "REL" } else { "STN" }.into()),
                degenerate: false,
            })
            .collect();
        FeatureTable::new(vec!["a".into(), "b".into()], rows, meta).unwrap()
    }

    #[test]
    fn vocabulary_order() {
        assert_eq!(class_vocabulary(&table()).unwrap(), vec!["STN", "REL"]);
    }

    #[test]
    fn artifact_round_trip_every_kind() {
        let t = table();
        let classes = class_vocabulary(&t).unwrap();
        for kind in ModelKind::ALL {
            let mut o = Hyperparameters::new();
            if kind != ModelKind::Knn {
                o.insert("n_estimators".into(), ParamValue::Int(5));
            }
            let spec = ModelSpec::new(kind, o).unwrap();
            let m = ModelArtifact::fit(&spec, &t, &classes, 4).unwrap();
            let mut buf = Vec::new();
            m.write_json(&mut buf).unwrap();
            let back = ModelArtifact::read_json(buf.as_slice(), "mem").unwrap();
            assert_eq!(back, m);
            for row in &t.rows {
                let p = back.predict_proba(row);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|&v| v >= 0.0));
            }
            let metrics = back.evaluate(&t).unwrap();
            assert!(metrics.accuracy > 0.9, "{kind}: {}", metrics.accuracy);
        }
    }

    #[test]
    fn column_mismatch_rejected() {
        let t = table();
        let classes = class_vocabulary(&t).unwrap();
        let spec = ModelSpec::new(ModelKind::Knn, Hyperparameters::new()).unwrap();
        let m = ModelArtifact::fit(&spec, &t, &classes, 0).unwrap();
        let mut other = t.clone();
        other.column_names[1] = "c".into();
        assert!(matches!(m.predict_table(&other), Err(Error::Schema { .. })));
    }
}
