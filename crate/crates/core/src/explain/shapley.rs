//! Shapley attributions under an interventional value function:
//! `v(S)` is the mean model output over background rows with the features in
//! `S` overwritten by the instance's values.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{FittedModel, ModelArtifact};

/// Largest feature count accepted by [`shapley_exact`] unless overridden.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;
/// Largest feature count accepted by [`shapley_retrain`].
pub const RETRAIN_CAP: usize = 6;

/// Anything with a scalar output per target that Shapley values can explain.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    fn output(&self, row: &[f64], target: usize) -> f64;

    /// Outputs along the path from `start` that switches the features of
    /// `order` to their `instance` values one at a time;
    /// `order.len() + 1` values, the first for `start` itself.
    fn path_outputs(&self, start: &[f64], instance: &[f64], order: &[usize], target: usize) -> Vec<f64> {
        direct_path(self, start, instance, order, target)
    }
}

/// Path outputs by evaluating the model at every step; steps that leave the
/// row unchanged reuse the previous output.
pub fn direct_path<P: Predictor + ?Sized>(
    model: &P,
    start: &[f64],
    instance: &[f64],
    order: &[usize],
    target: usize,
) -> Vec<f64> {
    let mut z = start.to_vec();
    let mut out = Vec::with_capacity(order.len() + 1);
    out.push(model.output(&z, target));
    for &f in order {
        let unchanged = z[f] == instance[f];
        z[f] = instance[f];
        let v = if unchanged {
            *out.last().unwrap()
        } else {
            model.output(&z, target)
        };
        out.push(v);
    }
    out
}

impl Predictor for ModelArtifact {
    fn n_features(&self) -> usize {
        ModelArtifact::n_features(self)
    }

    fn output(&self, row: &[f64], target: usize) -> f64 {
        self.predict_proba(row)[target]
    }

    fn path_outputs(&self, start: &[f64], instance: &[f64], order: &[usize], target: usize) -> Vec<f64> {
        match &self.model {
            FittedModel::Knn(m) => m
                .path_proba(start, instance, order)
                .into_iter()
                .map(|p| p[target])
                .collect(),
            _ => direct_path(self, start, instance, order, target),
        }
    }
}

/// Wraps a plain function as a single-output predictor; the target index is
/// ignored. Useful for regression-style models in tests.
pub struct FnPredictor<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn output(&self, row: &[f64], _target: usize) -> f64 {
        (self.f)(row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    pub phi: Vec<f64>,
    /// Value of the empty coalition.
    pub base_value: f64,
}

impl PhiVector {
    /// `base_value + Σ φ`.
    pub fn total(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

fn check_inputs<P: Predictor + ?Sized>(model: &P, instance: &[f64], background: &[Vec<f64>]) -> Result<()> {
    if instance.len() != model.n_features() {
        return Err(Error::param(format!(
            "instance has {} features, model expects {}",
            instance.len(),
            model.n_features()
        )));
    }
    if background.is_empty() {
        return Err(Error::param("background sample is empty"));
    }
    if let Some(b) = background.iter().find(|b| b.len() != instance.len()) {
        return Err(Error::param(format!(
            "background row has {} features, expected {}",
            b.len(),
            instance.len()
        )));
    }
    Ok(())
}

/// `s!(n−s−1)!/n!` for every coalition size `s` in `0..n`.
fn coalition_weights(n: usize) -> Vec<f64> {
    // 1 / (n · C(n−1, s)), with the binomial built up multiplicatively.
    let mut w = Vec::with_capacity(n);
    let mut binom = 1.0f64;
    for s in 0..n {
        w.push(1.0 / (n as f64 * binom));
        binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
    }
    w
}

/// Shapley values from a table of coalition values indexed by bitmask
/// (`values.len() == 2^n`).
pub fn shapley_from_coalitions(n: usize, values: &[f64]) -> PhiVector {
    assert_eq!(values.len(), 1 << n);
    let w = coalition_weights(n);
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..values.len() {
            if mask & bit == 0 {
                *p += w[mask.count_ones() as usize] * (values[mask | bit] - values[mask]);
            }
        }
    }
    PhiVector {
        phi,
        base_value: values[0],
    }
}

/// Exact Shapley values by enumerating all `2^F` coalitions.
pub fn shapley_exact<P: Predictor + ?Sized>(
    model: &P,
    instance: &[f64],
    background: &[Vec<f64>],
    target: usize,
    cap: usize,
) -> Result<PhiVector> {
    check_inputs(model, instance, background)?;
    let n = instance.len();
    if n > cap {
        return Err(Error::EnumerationCap { features: n, cap });
    }
    let mut z = vec![0.0; n];
    let values: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let mut total = 0.0;
            for b in background {
                for f in 0..n {
                    z[f] = if mask & (1 << f) != 0 { instance[f] } else { b[f] };
                }
                total += model.output(&z, target);
            }
            total / background.len() as f64
        })
        .collect();
    Ok(shapley_from_coalitions(n, &values))
}

/// Exact Shapley values for a caller-supplied value function, typically a
/// model retrained on each feature subset. `value` receives the sorted
/// feature indices of a coalition. At most [`RETRAIN_CAP`] features.
pub fn shapley_retrain<V>(n_features: usize, mut value: V) -> Result<PhiVector>
where
    V: FnMut(&[usize]) -> Result<f64>,
{
    if n_features > RETRAIN_CAP {
        return Err(Error::EnumerationCap {
            features: n_features,
            cap: RETRAIN_CAP,
        });
    }
    let values = (0..1usize << n_features)
        .map(|mask| {
            let subset: Vec<usize> = (0..n_features).filter(|f| mask & (1 << f) != 0).collect();
            value(&subset)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(shapley_from_coalitions(n_features, &values))
}

/// Permutation-sampling estimate with a caller-owned RNG.
pub fn shapley_sampled_with_rng<P: Predictor + ?Sized>(
    model: &P,
    instance: &[f64],
    background: &[Vec<f64>],
    target: usize,
    n_permutations: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PhiVector> {
    check_inputs(model, instance, background)?;
    if n_permutations == 0 {
        return Err(Error::param("n_permutations must be at least 1"));
    }
    let n = instance.len();
    let mut phi = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..n_permutations {
        order.shuffle(rng);
        for b in background {
            let path = model.path_outputs(b, instance, &order, target);
            for (step, &f) in order.iter().enumerate() {
                phi[f] += path[step + 1] - path[step];
            }
        }
    }
    let denom = (n_permutations * background.len()) as f64;
    phi.iter_mut().for_each(|p| *p /= denom);
    let base_value = background.iter().map(|b| model.output(b, target)).sum::<f64>() / background.len() as f64;
    Ok(PhiVector { phi, base_value })
}

/// Permutation-sampling estimate: for each sampled feature order and each
/// background row, features are switched to the instance's values in order
/// and each one is credited with the change in output.
pub fn shapley_sampled<P: Predictor + ?Sized>(
    model: &P,
    instance: &[f64],
    background: &[Vec<f64>],
    target: usize,
    n_permutations: usize,
    seed: u64,
) -> Result<PhiVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapley_sampled_with_rng(model, instance, background, target, n_permutations, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_model() {
        let m = FnPredictor {
            n_features: 2,
            f: |x: &[f64]| x[0] + 2.0 * x[1],
        };
        let phi = shapley_exact(&m, &[1.0, 1.0], &[vec![0.0, 0.0]], 0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(phi.phi, vec![1.0, 2.0]);
        assert_eq!(phi.base_value, 0.0);
    }

    #[test]
    fn symmetric_model() {
        let m = FnPredictor {
            n_features: 2,
            f: |x: &[f64]| x[0] + x[1],
        };
        let phi = shapley_exact(&m, &[1.0, 1.0], &[vec![0.0, 0.0]], 0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(phi.phi[0], phi.phi[1]);
        assert_eq!(phi.phi[0], 1.0);
    }

    #[test]
    fn weights_sum_to_one_per_feature() {
        for n in 1..12usize {
            let w = coalition_weights(n);
            // Σ_s C(n−1, s) · w(s) = 1
            let mut binom = 1.0;
            let mut total = 0.0;
            for (s, ws) in w.iter().enumerate() {
                total += binom * ws;
                binom = binom * (n - 1 - s) as f64 / (s + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = FnPredictor {
            n_features: 3,
            f: |x: &[f64]| x[0],
        };
        let err = shapley_exact(&m, &[0.0; 3], &[vec![0.0; 3]], 0, 2).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { features: 3, cap: 2 }));
    }

    #[test]
    fn sampled_is_seeded_and_efficient() {
        let m = FnPredictor {
            n_features: 3,
            f: |x: &[f64]| x[0] * x[1] + x[2].sin(),
        };
        let bg = vec![vec![0.5, -1.0, 0.2], vec![1.5, 0.3, -0.7]];
        let x = [1.0, 2.0, 3.0];
        let a = shapley_sampled(&m, &x, &bg, 0, 50, 7).unwrap();
        let b = shapley_sampled(&m, &x, &bg, 0, 50, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.total() - m.output(&x, 0)).abs() < 1e-12);
    }

    #[test]
    fn sampled_error_shrinks_with_permutations() {
        let toys: [fn(&[f64]) -> f64; 3] = [
            |x| x[0] * x[1] - x[2] * x[3] + x[4],
            |x| (x[0] + x[1] * x[2]).tanh() + x[3] * x[3] * x[4],
            |x| x.iter().product::<f64>() + x[0].max(x[4]),
        ];
        let bg = vec![vec![0.1, -0.4, 0.8, 0.3, -1.0], vec![-0.6, 0.9, 0.2, -0.2, 0.5]];
        let x = [1.0, -1.5, 0.7, 2.0, 0.4];
        let mut errs = Vec::new();
        for n in [100, 1000, 10_000] {
            let mut total = 0.0;
            for f in toys {
                let m = FnPredictor { n_features: 5, f };
                let exact = shapley_exact(&m, &x, &bg, 0, DEFAULT_ENUMERATION_CAP).unwrap();
                for seed in 0..4 {
                    let s = shapley_sampled(&m, &x, &bg, 0, n, seed).unwrap();
                    total += exact.phi.iter().zip(&s.phi).map(|(a, b)| (a - b).abs()).sum::<f64>() / 5.0;
                }
            }
            errs.push(total / 12.0);
        }
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
    }

    #[test]
    fn retrain_mode_matches_coalition_game() {
        // Unanimity game on {0, 1}: v(S) = 1 iff both are present.
        let phi = shapley_retrain(3, |s| Ok(f64::from(u8::from(s.contains(&0) && s.contains(&1))))).unwrap();
        assert_eq!(phi.phi, vec![0.5, 0.5, 0.0]);
        assert!(shapley_retrain(7, |_| Ok(0.0)).is_err());
    }
}
