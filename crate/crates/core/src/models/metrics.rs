//! Classification metrics and one-vs-rest ROC AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    /// `None` when some class has no positive or no negative row.
    pub auc_ovr_macro: Option<f64>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy, macro precision/recall/F1 and the confusion matrix. Macro
/// averages run over the classes present in `truth` or `predicted`; a class
/// with an empty denominator scores 0.
pub fn classification_metrics(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Metrics> {
    if truth.len() != predicted.len() {
        return Err(Error::Evaluation(format!(
            "{} labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Evaluation("no rows to evaluate".into()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let (mut precision, mut recall, mut f1, mut present) = (0.0, 0.0, 0.0, 0usize);
    for c in 0..n_classes {
        let tp = confusion[c][c] as f64;
        let support: usize = confusion[c].iter().sum();
        let predicted_c: usize = (0..n_classes).map(|r| confusion[r][c]).sum();
        if support == 0 && predicted_c == 0 {
            continue;
        }
        present += 1;
        let fp = predicted_c as f64 - tp;
        let fn_ = support as f64 - tp;
        precision += if predicted_c > 0 { tp / predicted_c as f64 } else { 0.0 };
        recall += if support > 0 { tp / support as f64 } else { 0.0 };
        let denom = 2.0 * tp + fp + fn_;
        f1 += if denom > 0.0 { 2.0 * tp / denom } else { 0.0 };
    }
    let present = present as f64;
    Ok(Metrics {
        accuracy: correct as f64 / truth.len() as f64,
        precision_macro: precision / present,
        recall_macro: recall / present,
        f1_macro: f1 / present,
        auc_ovr_macro: None,
        confusion,
    })
}

/// Binary ROC AUC of `scores` for `positive` rows via the Mann-Whitney rank
/// statistic; tied scores share their mid-rank.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!(
            "{n_pos} positive and {n_neg} negative rows; both must be non-zero"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; the tied block i..=j shares their mean.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Macro average over classes of the one-vs-rest AUC of each class's
/// probability column.
pub fn roc_auc_ovr(scores: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation("score and label counts differ".into()));
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        total += binary_auc(&col, &pos).map_err(|e| match e {
            Error::UndefinedAuc(m) => Error::UndefinedAuc(format!("class {c}: {m}")),
            other => other,
        })?;
    }
    Ok(total / n_classes as f64)
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}
