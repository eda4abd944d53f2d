//! Stratified k-fold cross-validation and exhaustive grid search.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::models::{class_vocabulary, encode_labels, Metrics, ModelArtifact, ModelKind, ModelSpec, ParamValue};

/// Candidate values per hyperparameter name.
pub type ParamGrid = BTreeMap<String, Vec<ParamValue>>;

/// Cartesian product of `grid` on top of the kind's defaults, in name order
/// with the last name varying fastest.
pub fn expand_grid(kind: ModelKind, grid: &ParamGrid) -> Result<Vec<ModelSpec>> {
    let mut combos: Vec<BTreeMap<String, ParamValue>> = vec![BTreeMap::new()];
    for (name, values) in grid {
        if values.is_empty() {
            return Err(Error::param(format!("grid entry {name:?} has no values")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(name.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    combos.into_iter().map(|c| ModelSpec::new(kind, c)).collect()
}

/// Test-fold row indices (each sorted). Every class is shuffled and dealt
/// round-robin over the folds, so each fold holds every class.
pub fn stratified_kfold(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (c, mut rows) in by_class.into_iter().enumerate() {
        if rows.len() < k {
            return Err(Error::Stratification(format!(
                "class {c} has {} rows, fewer than the {k} folds",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        let n_c = rows.len();
        for (j, r) in rows.into_iter().enumerate() {
            folds[(offset + j) % k].push(r);
        }
        // Rotate the starting fold so remainders spread evenly.
        offset = (offset + n_c) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub spec: ModelSpec,
    pub folds: Vec<Metrics>,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl CvResult {
    fn from_folds(spec: ModelSpec, folds: Vec<Metrics>) -> Self {
        let pick = |f: fn(&Metrics) -> f64| MeanStd::of(&folds.iter().map(f).collect::<Vec<_>>());
        CvResult {
            accuracy: pick(|m| m.accuracy),
            precision: pick(|m| m.precision_macro),
            recall: pick(|m| m.recall_macro),
            f1: pick(|m| m.f1_macro),
            spec,
            folds,
        }
    }

    /// Selection order: higher mean F1, then higher mean accuracy, then the
    /// smaller parameter tuple. `Less` means `self` is preferred.
    pub fn preference(&self, other: &CvResult) -> Ordering {
        other
            .f1
            .mean
            .total_cmp(&self.f1.mean)
            .then(other.accuracy.mean.total_cmp(&self.accuracy.mean))
            .then(self.spec.tuple_cmp(&other.spec))
    }
}

/// One grid point: a spec and the feature table of its window geometry.
#[derive(Debug, Clone, Copy)]
pub struct GridCandidate<'a> {
    pub spec: &'a ModelSpec,
    pub table: &'a FeatureTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    /// One entry per candidate, in candidate order.
    pub results: Vec<CvResult>,
    pub best: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &CvResult {
        &self.results[self.best]
    }
}

fn fold_job(spec: &ModelSpec, table: &FeatureTable, classes: &[String], test: &[usize], seed: u64) -> Result<Metrics> {
    let mut is_test = vec![false; table.n_rows()];
    for &i in test {
        is_test[i] = true;
    }
    let train: Vec<usize> = (0..table.n_rows()).filter(|&i| !is_test[i]).collect();
    let model = ModelArtifact::fit(spec, &table.select_rows(&train), classes, seed)?;
    model.evaluate(&table.select_rows(test))
}

/// `k`-fold stratified cross-validation of one spec.
pub fn cross_validate(spec: &ModelSpec, table: &FeatureTable, k: usize, seed: u64) -> Result<CvResult> {
    let r = grid_search(&[GridCandidate { spec, table }], k, seed)?;
    Ok(r.results.into_iter().next().unwrap())
}

/// Cross-validates every candidate; all (candidate, fold) fits run in
/// parallel and are gathered in candidate order. Fold assignment uses `seed`
/// for every candidate; fold `j` fits with seed `seed + j`.
pub fn grid_search(candidates: &[GridCandidate<'_>], k: usize, seed: u64) -> Result<GridSearchResult> {
    if candidates.is_empty() {
        return Err(Error::param("grid search needs at least one configuration"));
    }
    let mut jobs = Vec::new();
    let mut prepared = Vec::new();
    for (c, cand) in candidates.iter().enumerate() {
        let classes = class_vocabulary(cand.table)?;
        let y = encode_labels(cand.table, &classes)?;
        let folds = stratified_kfold(&y, classes.len(), k, seed)?;
        for j in 0..k {
            jobs.push((c, j));
        }
        prepared.push((classes, folds));
    }
    let outcomes: Vec<Result<Metrics>> = jobs
        .par_iter()
        .map(|&(c, j)| {
            let (classes, folds) = &prepared[c];
            fold_job(
                candidates[c].spec,
                candidates[c].table,
                classes,
                &folds[j],
                seed.wrapping_add(j as u64),
            )
        })
        .collect();
    let mut outcomes = outcomes.into_iter();
    let mut results = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let folds = outcomes.by_ref().take(k).collect::<Result<Vec<_>>>()?;
        results.push(CvResult::from_folds(cand.spec.clone(), folds));
    }
    let best = (0..results.len())
        .min_by(|&a, &b| results[a].preference(&results[b]))
        .unwrap();
    Ok(GridSearchResult { results, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RowMeta;
    use crate::models::Hyperparameters;

    #[test]
    fn grid_expansion_order() {
        let mut g = ParamGrid::new();
        g.insert("n_neighbors".into(), vec![ParamValue::Int(1), ParamValue::Int(3)]);
        g.insert("p".into(), vec![ParamValue::Int(1), ParamValue::Int(2)]);
        let specs = expand_grid(ModelKind::Knn, &g).unwrap();
        let got: Vec<String> = specs.iter().map(|s| s.params_string()).collect();
        assert_eq!(
            got,
            [
                "n_neighbors: 1, p: 1, weights: distance",
                "n_neighbors: 1, p: 2, weights: distance",
                "n_neighbors: 3, p: 1, weights: distance",
                "n_neighbors: 3, p: 2, weights: distance",
            ]
        );
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<usize> = (0..53).map(|i| i % 3).collect();
        let folds = stratified_kfold(&labels, 3, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        for f in &folds {
            for c in 0..3 {
                assert!(f.iter().any(|&i| labels[i] == c));
            }
            assert!(f.len() >= 10 && f.len() <= 11);
        }
    }

    #[test]
    fn too_few_rows_for_folds() {
        let labels = [0, 0, 0, 0, 0, 1, 1];
        assert!(matches!(stratified_kfold(&labels, 2, 5, 0), Err(Error::Stratification(_))));
    }

    #[test]
    fn mean_std_format() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(
            MeanStd {
                mean: 0.926,
                std: 0.0053
            }
            .to_string(),
            "0.926 ± 0.0053"
        );
    }

    fn toy_table() -> FeatureTable {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 2) as f64 * 10.0 + (i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let meta = (0..40)
            .map(|i| RowMeta {
                device_id: "d".into(),
                timestamp_max: i,
                label: Some(if i % 2 == 0 { "REL" } else { "STN" }.into()),
                degenerate: false,
            })
            .collect();
        FeatureTable::new(vec!["signal".into(), "noise".into()], rows, meta).unwrap()
    }

    #[test]
    fn dominant_config_selected() {
        let table = toy_table();
        let good = ModelSpec::new(ModelKind::Knn, Hyperparameters::new()).unwrap();
        let mut o = Hyperparameters::new();
        o.insert("max_depth".into(), ParamValue::Int(0));
        o.insert("n_estimators".into(), ParamValue::Int(3));
        let stump = ModelSpec::new(ModelKind::RandomForest, o).unwrap();
        let r = grid_search(
            &[
                GridCandidate { spec: &stump, table: &table },
                GridCandidate { spec: &good, table: &table },
            ],
            5,
            11,
        )
        .unwrap();
        assert_eq!(r.best, 1);
        assert_eq!(r.results[1].folds.len(), 5);
        assert_eq!(r.results[1].f1.mean, 1.0);
        let single = cross_validate(&good, &table, 5, 11).unwrap();
        assert_eq!(single, r.results[1]);
    }
}
