//! Per-class SHAP summaries: explain a seeded sample of rows from each class
//! toward its own class and rank features by mean |φ|.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::shapley::{shapley_exact, shapley_sampled_with_rng, PhiVector, DEFAULT_ENUMERATION_CAP};
use crate::features::FeatureTable;
use crate::models::ModelArtifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributionMode {
    Exact,
    Sampled { n_permutations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionConfig {
    /// Rows explained per class.
    pub per_class: usize,
    pub mode: AttributionMode,
    pub seed: u64,
    pub enumeration_cap: usize,
    /// Rows of the report per class.
    pub top_k: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        AttributionConfig {
            per_class: 25,
            mode: AttributionMode::Sampled { n_permutations: 8 },
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    /// Table rows that were explained.
    pub instances: Vec<usize>,
    /// Every feature with its mean |φ|, largest first; ties keep column order.
    pub ranking: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub classes: Vec<ClassSummary>,
    /// Mean |φ| over all explained rows, ranked.
    pub pooled: Vec<(String, f64)>,
}

/// Up to `n` distinct rows of `table`, chosen with a seeded shuffle and
/// returned in table order.
pub fn sample_background(table: &FeatureTable, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut idx: Vec<usize> = (0..table.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| table.rows[i].clone()).collect()
}

fn rank(names: &[String], mean_abs: &[f64]) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
    order.into_iter().map(|i| (names[i].clone(), mean_abs[i])).collect()
}

fn mean_abs(phis: &[&PhiVector], n_features: usize) -> Vec<f64> {
    let mut m = vec![0.0; n_features];
    for p in phis {
        for (acc, v) in m.iter_mut().zip(&p.phi) {
            *acc += v.abs();
        }
    }
    m.iter_mut().for_each(|v| *v /= phis.len() as f64);
    m
}

/// Samples `config.per_class` rows per model class, attributes each toward
/// its own class against `background`, and ranks features per class and
/// pooled. Instance `i` (in class-then-row order) draws its permutations
/// from stream `i` of the seeded generator, so results do not depend on
/// thread scheduling.
pub fn class_shap_summary(
    model: &ModelArtifact,
    table: &FeatureTable,
    background: &[Vec<f64>],
    config: &AttributionConfig,
) -> Result<ShapSummary> {
    model.check_columns(table)?;
    if config.per_class == 0 {
        return Err(Error::param("per-class instance count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut jobs: Vec<(usize, usize)> = Vec::new();
    let mut picked: Vec<Vec<usize>> = Vec::new();
    for (c, class) in model.classes.iter().enumerate() {
        let mut rows: Vec<usize> = (0..table.n_rows())
            .filter(|&i| table.row_meta[i].label.as_deref() == Some(class.as_str()))
            .collect();
        if rows.len() < config.per_class {
            return Err(Error::Sampling(format!(
                "class {class} has {} rows, {} requested",
                rows.len(),
                config.per_class
            )));
        }
        rows.shuffle(&mut rng);
        rows.truncate(config.per_class);
        rows.sort_unstable();
        jobs.extend(rows.iter().map(|&r| (c, r)));
        picked.push(rows);
    }
    let phis = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(c, r))| {
            let x = &table.rows[r];
            match config.mode {
                AttributionMode::Exact => shapley_exact(model, x, background, c, config.enumeration_cap),
                AttributionMode::Sampled { n_permutations } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(i as u64 + 1);
                    shapley_sampled_with_rng(model, x, background, c, n_permutations, &mut rng)
                }
            }
        })
        .collect::<Result<Vec<PhiVector>>>()?;
    let names = &model.feature_names;
    let n = names.len();
    let mut classes = Vec::new();
    let mut start = 0;
    for (c, rows) in picked.into_iter().enumerate() {
        let chunk: Vec<&PhiVector> = phis[start..start + rows.len()].iter().collect();
        start += rows.len();
        classes.push(ClassSummary {
            class: model.classes[c].clone(),
            instances: rows,
            ranking: rank(names, &mean_abs(&chunk, n)),
        });
    }
    let all: Vec<&PhiVector> = phis.iter().collect();
    Ok(ShapSummary {
        classes,
        pooled: rank(names, &mean_abs(&all, n)),
    })
}
