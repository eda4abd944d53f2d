//! CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many features are examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Size-weighted Gini impurity of a two-way split.
pub fn weighted_gini(left: &[usize], right: &[usize]) -> f64 {
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = (nl + nr) as f64;
    (nl as f64 * gini(left) + nr as f64 * gini(right)) / n
}

struct Best {
    feature: usize,
    threshold: f64,
    /// Σ c²/n over both children; larger is purer.
    purity: f64,
}

impl DecisionTree {
    /// Fits on the rows listed in `rows` (repeats allowed, as produced by a
    /// bootstrap). `rng` drives feature subsampling.
    pub fn fit<R: Rng>(
        x: &[Vec<f64>],
        y: &[usize],
        rows: &[usize],
        n_classes: usize,
        params: &TreeParams,
        rng: &mut R,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Model("cannot fit a tree on an empty table".into()));
        }
        let n_features = x[rows[0]].len();
        let k = params.max_features.resolve(n_features);
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_classes,
        };
        // (node index, rows, depth)
        tree.nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows.to_vec(), 0)];
        let mut features: Vec<usize> = (0..n_features).collect();
        while let Some((id, node_rows, depth)) = stack.pop() {
            let counts = class_counts(y, &node_rows, n_classes);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = params.max_depth.is_none_or(|d| depth < d);
            let split = if !pure && depth_ok && node_rows.len() >= params.min_samples_split {
                if k < n_features {
                    features.shuffle(rng);
                }
                best_split(x, y, &node_rows, &counts, &features[..k], n_classes)
                    .or_else(|| best_split(x, y, &node_rows, &counts, &features[k..], n_classes))
            } else {
                None
            };
            match split {
                None => {
                    let n = node_rows.len() as f64;
                    tree.nodes[id] = Node::Leaf {
                        distribution: counts.iter().map(|&c| c as f64 / n).collect(),
                    };
                }
                Some(best) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = node_rows
                        .iter()
                        .partition(|&&i| x[i][best.feature] <= best.threshold);
                    let left = tree.nodes.len();
                    let right = left + 1;
                    let placeholder = Node::Leaf {
                        distribution: Vec::new(),
                    };
                    tree.nodes.push(placeholder.clone());
                    tree.nodes.push(placeholder);
                    tree.nodes[id] = Node::Split {
                        feature: best.feature,
                        threshold: best.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Ok(tree)
    }

    fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        self.leaf(row).to_vec()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

fn class_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in rows {
        counts[y[i]] += 1;
    }
    counts
}

/// Best Gini split over `features`, thresholds at midpoints between
/// consecutive distinct values. Ties keep the first candidate examined.
fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    counts: &[usize],
    features: &[usize],
    n_classes: usize,
) -> Option<Best> {
    let n = rows.len();
    let mut best: Option<Best> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for &f in features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x[i][f], y[i])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(counts);
        // Running Σc² for each side.
        let mut sq_left = 0.0f64;
        let mut sq_right: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        for j in 0..n - 1 {
            let c = pairs[j].1;
            sq_left += (2 * left[c] + 1) as f64;
            sq_right -= (2 * right[c] - 1) as f64;
            left[c] += 1;
            right[c] -= 1;
            if pairs[j].0 == pairs[j + 1].0 {
                continue;
            }
            let nl = (j + 1) as f64;
            let nr = (n - j - 1) as f64;
            let purity = sq_left / nl + sq_right / nr;
            if best.as_ref().is_none_or(|b| purity > b.purity) {
                let threshold = midpoint(pairs[j].0, pairs[j + 1].0);
                best = Some(Best {
                    feature: f,
                    threshold,
                    purity,
                });
            }
        }
    }
    best
}

/// Midpoint that still separates `a < b` when they are adjacent floats.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || !m.is_finite() {
        a
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> DecisionTree {
        let rows: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        DecisionTree::fit(x, y, &rows, n_classes, &TreeParams::default(), &mut rng).unwrap()
    }

    #[test]
    fn pure_table_is_single_leaf() {
        let t = fit(&[vec![1.0], vec![2.0]], &[1, 1], 2);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_proba(&[5.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn separable_one_dimensional() {
        let x: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 0, 1, 1, 1];
        let t = fit(&x, &y, 2);
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, -0.5),
            _ => panic!("expected a split"),
        }
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(t.predict_proba(row)[label], 1.0);
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(weighted_gini(&[4, 0], &[0, 4]), 0.0);
        assert_eq!(gini(&[2, 2]), 0.5);
        assert!((weighted_gini(&[3, 1], &[1, 3]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn max_depth_limits_growth() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let rows: Vec<usize> = (0..16).collect();
        let params = TreeParams {
            max_depth: Some(2),
            ..TreeParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = DecisionTree::fit(&x, &y, &rows, 2, &params, &mut rng).unwrap();
        assert!(t.depth() <= 2);
    }

    #[test]
    fn midpoint_of_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
    }
}
