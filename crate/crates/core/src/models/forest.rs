//! Random forest of CART trees.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    /// Draw each tree's rows with replacement; otherwise every tree sees all
    /// rows once.
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

impl RandomForest {
    /// Trees are fitted in parallel; each gets its own seed drawn in order from
    /// the master seed, so the result does not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Result<Self> {
        if params.n_estimators == 0 {
            return Err(Error::param("n_estimators must be at least 1"));
        }
        if x.is_empty() {
            return Err(Error::Model("cannot fit a forest on an empty table".into()));
        }
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..params.n_estimators).map(|_| master.gen()).collect();
        let n = x.len();
        let trees = seeds
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, &rows, n_classes, &params.tree, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { trees, n_classes })
    }

    /// Mean of the per-tree leaf distributions.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(t.predict_proba(row)) {
                *acc += v;
            }
        }
        let m = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= m);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::MaxFeatures;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let centres = [[0.0, 0.0], [4.0, 4.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            x.push(vec![centres[c][0] + noise.sample(&mut rng), centres[c][1] + noise.sample(&mut rng)]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_equals_tree() {
        let (x, y) = blobs(60, 1);
        let params = ForestParams {
            n_estimators: 1,
            tree: TreeParams {
                max_features: MaxFeatures::All,
                ..TreeParams::default()
            },
            bootstrap: false,
        };
        let forest = RandomForest::fit(&x, &y, 2, &params, 3).unwrap();
        let rows: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = DecisionTree::fit(&x, &y, &rows, 2, &params.tree, &mut rng).unwrap();
        for row in &x {
            assert_eq!(forest.predict_proba(row), tree.predict_proba(row));
        }
    }

    #[test]
    fn seeded_and_accurate() {
        let (x, y) = blobs(200, 2);
        let (xt, yt) = blobs(200, 3);
        let params = ForestParams {
            n_estimators: 25,
            tree: TreeParams {
                max_features: MaxFeatures::Sqrt,
                ..TreeParams::default()
            },
            bootstrap: true,
        };
        let a = RandomForest::fit(&x, &y, 2, &params, 9).unwrap();
        let b = RandomForest::fit(&x, &y, 2, &params, 9).unwrap();
        assert_eq!(a, b);
        let correct = xt
            .iter()
            .zip(&yt)
            .filter(|(row, &label)| {
                let p = a.predict_proba(row);
                (p[1] > p[0]) == (label == 1)
            })
            .count();
        assert!(correct as f64 / yt.len() as f64 >= 0.95);
    }
}
