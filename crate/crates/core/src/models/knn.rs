//! k-nearest-neighbour classifier with Minkowski distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Uniform,
    /// Votes weighted by `1 / d`; neighbours at distance 0 take all the mass.
    Distance,
}

/// Minkowski distance with exponent `p` (1 = Manhattan, 2 = Euclidean).
pub fn minkowski_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else if p == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Per-column z-score parameters from the training rows. Constant columns
/// get scale 1 so they pass through centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let cols = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let mut mean = vec![0.0; cols];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub p: f64,
    pub weighting: Weighting,
    pub n_classes: usize,
    pub standardizer: Option<Standardizer>,
    /// Training rows after standardization.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl KnnModel {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        k: usize,
        p: f64,
        weighting: Weighting,
        standardize: bool,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("n_neighbors must be at least 1"));
        }
        if k > x.len() {
            return Err(Error::param(format!(
                "n_neighbors = {k} exceeds the {} training rows",
                x.len()
            )));
        }
        if !(p >= 1.0) {
            return Err(Error::param(format!("Minkowski exponent p must be >= 1, got {p}")));
        }
        if x.len() != y.len() {
            return Err(Error::param("feature and label counts differ"));
        }
        let standardizer = standardize.then(|| Standardizer::fit(x));
        let x = match &standardizer {
            Some(s) => x.iter().map(|r| s.transform(r)).collect(),
            None => x.to_vec(),
        };
        Ok(KnnModel {
            k,
            p,
            weighting,
            n_classes,
            standardizer,
            x,
            y: y.to_vec(),
        })
    }

    /// Indices and distances of the `k` nearest training rows, nearest first;
    /// equal distances are ordered by training index.
    pub fn neighbors(&self, row: &[f64]) -> Vec<(f64, usize)> {
        let query = match &self.standardizer {
            Some(s) => s.transform(row),
            None => row.to_vec(),
        };
        let mut dists: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, t)| (minkowski_distance(&query, t, self.p), i))
            .collect();
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_key);
            dists.truncate(self.k);
        }
        dists.sort_by(by_key);
        dists
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        self.vote(&self.neighbors(row))
    }

    /// Probabilities along the path that starts at `start` and switches the
    /// features in `order` to their `target` values one at a time (so
    /// `order.len() + 1` vectors). Distances are updated per feature instead
    /// of recomputed; the end points are evaluated directly.
    pub fn path_proba(&self, start: &[f64], target: &[f64], order: &[usize]) -> Vec<Vec<f64>> {
        let std = |r: &[f64]| match &self.standardizer {
            Some(s) => s.transform(r),
            None => r.to_vec(),
        };
        let mut z = std(start);
        let goal = std(target);
        let term = |a: f64, b: f64| {
            let d = (a - b).abs();
            if self.p == 1.0 {
                d
            } else {
                d.powf(self.p)
            }
        };
        let mut acc: Vec<f64> = self
            .x
            .iter()
            .map(|t| z.iter().zip(t).map(|(a, b)| term(*a, *b)).sum())
            .collect();
        let mut out = Vec::with_capacity(order.len() + 1);
        out.push(self.predict_proba(start));
        for (step, &f) in order.iter().enumerate() {
            if step + 1 == order.len() {
                break;
            }
            if z[f] != goal[f] {
                for (a, t) in acc.iter_mut().zip(&self.x) {
                    *a = (*a + term(goal[f], t[f]) - term(z[f], t[f])).max(0.0);
                }
                z[f] = goal[f];
                out.push(self.vote(&self.nearest(&acc)));
            } else {
                let last = out.last().unwrap().clone();
                out.push(last);
            }
        }
        if !order.is_empty() {
            let mut end = start.to_vec();
            for &f in order {
                end[f] = target[f];
            }
            out.push(self.predict_proba(&end));
        }
        out
    }

    fn nearest(&self, acc: &[f64]) -> Vec<(f64, usize)> {
        let inv = 1.0 / self.p;
        let mut dists: Vec<(f64, usize)> = acc
            .iter()
            .enumerate()
            .map(|(i, &a)| (if self.p == 1.0 { a } else { a.powf(inv) }, i))
            .collect();
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_key);
            dists.truncate(self.k);
        }
        dists.sort_by(by_key);
        dists
    }

    fn vote(&self, neighbors: &[(f64, usize)]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        match self.weighting {
            Weighting::Uniform => {
                for &(_, i) in neighbors {
                    scores[self.y[i]] += 1.0;
                }
            }
            Weighting::Distance => {
                let exact: Vec<usize> = neighbors
                    .iter()
                    .filter(|(d, _)| *d == 0.0)
                    .map(|&(_, i)| i)
                    .collect();
                if exact.is_empty() {
                    for &(d, i) in neighbors {
                        scores[self.y[i]] += 1.0 / d;
                    }
                } else {
                    for i in exact {
                        scores[self.y[i]] += 1.0;
                    }
                }
            }
        }
        let total: f64 = scores.iter().sum();
        scores.iter_mut().for_each(|s| *s /= total);
        scores
    }
}
