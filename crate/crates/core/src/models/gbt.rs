//! Multiclass gradient-boosted regression trees with softmax loss and
//! L1/L2-regularized leaf weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::tree::midpoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    /// L1 soft threshold on the gradient sum.
    pub reg_alpha: f64,
    /// L2 shift added to the hessian sum.
    pub reg_lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    /// Histogram bins per feature, at most 256.
    pub max_bins: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            learning_rate: 0.1,
            max_depth: 7,
            n_estimators: 200,
            reg_alpha: 0.1,
            reg_lambda: 0.01,
            min_child_weight: 1.0,
            max_bins: 255,
        }
    }
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    g.signum() * (g.abs() - alpha).max(0.0)
}

/// Optimal leaf weight `−sign(G)·max(|G| − α, 0) / (H + λ)`.
pub fn leaf_weight(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    -soft_threshold(g, alpha) / (h + lambda)
}

/// Loss reduction score of a node with gradient sum `g` and hessian sum `h`.
fn node_score(g: f64, h: f64, alpha: f64, lambda: f64) -> f64 {
    let t = soft_threshold(g, alpha);
    t * t / (h + lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Per-feature cut points. A value `v` falls in bin `b` = number of
/// thresholds strictly below `v`, so `bin <= b` is equivalent to
/// `v <= thresholds[b]`.
struct Binned {
    thresholds: Vec<Vec<f64>>,
    /// Column-major bin indices.
    bins: Vec<Vec<u8>>,
}

fn bin_features(x: &[Vec<f64>], max_bins: usize) -> Binned {
    let n_features = x[0].len();
    let (thresholds, bins): (Vec<Vec<f64>>, Vec<Vec<u8>>) = (0..n_features)
        .into_par_iter()
        .map(|f| {
            let mut uniq: Vec<f64> = x.iter().map(|r| r[f]).collect();
            uniq.sort_unstable_by(f64::total_cmp);
            uniq.dedup();
            let mut cuts: Vec<f64> = if uniq.len() <= max_bins {
                uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect()
            } else {
                (1..max_bins)
                    .map(|b| {
                        let i = b * uniq.len() / max_bins;
                        midpoint(uniq[i - 1], uniq[i])
                    })
                    .collect()
            };
            cuts.dedup();
            let col = x
                .iter()
                .map(|r| cuts.partition_point(|t| *t < r[f]) as u8)
                .collect();
            (cuts, col)
        })
        .unzip();
    Binned { thresholds, bins }
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

fn grow_tree(binned: &Binned, grad: &[f64], hess: &[f64], params: &GbtParams) -> RegressionTree {
    let (alpha, lambda) = (params.reg_alpha, params.reg_lambda);
    let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
    let all: Vec<usize> = (0..grad.len()).collect();
    let mut stack = vec![(0usize, all, 0usize)];
    while let Some((id, rows, depth)) = stack.pop() {
        let g: f64 = rows.iter().map(|&i| grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| hess[i]).sum();
        let parent = node_score(g, h, alpha, lambda);
        let best = if depth < params.max_depth && rows.len() >= 2 {
            binned
                .bins
                .par_iter()
                .enumerate()
                .filter_map(|(f, col)| {
                    let nb = binned.thresholds[f].len() + 1;
                    if nb < 2 {
                        return None;
                    }
                    let mut hg = vec![0.0; nb];
                    let mut hh = vec![0.0; nb];
                    for &i in &rows {
                        let b = col[i] as usize;
                        hg[b] += grad[i];
                        hh[b] += hess[i];
                    }
                    let (mut gl, mut hl) = (0.0, 0.0);
                    let mut best: Option<Candidate> = None;
                    for b in 0..nb - 1 {
                        gl += hg[b];
                        hl += hh[b];
                        let (gr, hr) = (g - gl, h - hl);
                        if hl < params.min_child_weight || hr < params.min_child_weight {
                            continue;
                        }
                        let gain = node_score(gl, hl, alpha, lambda) + node_score(gr, hr, alpha, lambda) - parent;
                        if gain > 0.0 && best.as_ref().is_none_or(|c| gain > c.gain) {
                            best = Some(Candidate { gain, feature: f, bin: b });
                        }
                    }
                    best
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(None, |acc: Option<Candidate>, c| match acc {
                    Some(a) if a.gain >= c.gain => Some(a),
                    _ => Some(c),
                })
        } else {
            None
        };
        match best {
            None => {
                nodes[id] = RegNode::Leaf {
                    value: params.learning_rate * leaf_weight(g, h, alpha, lambda),
                };
            }
            Some(c) => {
                let col = &binned.bins[c.feature];
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| col[i] as usize <= c.bin);
                let left = nodes.len();
                nodes.push(RegNode::Leaf { value: 0.0 });
                nodes.push(RegNode::Leaf { value: 0.0 });
                nodes[id] = RegNode::Split {
                    feature: c.feature,
                    threshold: binned.thresholds[c.feature][c.bin],
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    RegressionTree { nodes }
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub n_classes: usize,
    /// Log class priors of the training labels.
    pub base_score: Vec<f64>,
    /// `rounds[r][k]` is the tree for class `k` in round `r`.
    pub rounds: Vec<Vec<RegressionTree>>,
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &GbtParams) -> Result<Self> {
        if !(params.learning_rate > 0.0) {
            return Err(Error::param(format!(
                "learning_rate must be positive, got {}",
                params.learning_rate
            )));
        }
        if params.reg_alpha < 0.0 || params.reg_lambda < 0.0 {
            return Err(Error::param("reg_alpha and reg_lambda must be non-negative"));
        }
        if params.max_bins < 2 || params.max_bins > 256 {
            return Err(Error::param("max_bins must be in 2..=256"));
        }
        if x.is_empty() {
            return Err(Error::Model("cannot fit boosting on an empty table".into()));
        }
        let n = x.len();
        let mut counts = vec![0usize; n_classes];
        for &c in y {
            counts[c] += 1;
        }
        let base_score: Vec<f64> = counts
            .iter()
            .map(|&c| (c.max(1) as f64 / n as f64).ln())
            .collect();
        let binned = bin_features(x, params.max_bins);
        let mut margin: Vec<Vec<f64>> = vec![base_score.clone(); n];
        let mut rounds = Vec::with_capacity(params.n_estimators);
        for _ in 0..params.n_estimators {
            let probs: Vec<Vec<f64>> = margin
                .iter()
                .map(|m| {
                    let mut p = m.clone();
                    softmax_in_place(&mut p);
                    p
                })
                .collect();
            let trees: Vec<RegressionTree> = (0..n_classes)
                .into_par_iter()
                .map(|k| {
                    let grad: Vec<f64> = (0..n)
                        .map(|i| probs[i][k] - f64::from(u8::from(y[i] == k)))
                        .collect();
                    let hess: Vec<f64> = (0..n)
                        .map(|i| (probs[i][k] * (1.0 - probs[i][k])).max(1e-16))
                        .collect();
                    grow_tree(&binned, &grad, &hess, params)
                })
                .collect();
            for (i, row) in x.iter().enumerate() {
                for (k, t) in trees.iter().enumerate() {
                    margin[i][k] += t.predict(row);
                }
            }
            rounds.push(trees);
        }
        Ok(GradientBoosting {
            n_classes,
            base_score,
            rounds,
        })
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut z = self.base_score.clone();
        for trees in &self.rounds {
            for (k, t) in trees.iter().enumerate() {
                z[k] += t.predict(row);
            }
        }
        softmax_in_place(&mut z);
        z
    }
}
