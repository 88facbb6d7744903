//! Linear SVM trained by stochastic subgradient descent on the primal
//!
//! ```text
//! f(w, b) = lambda/2 * (|w|^2 + b^2) + 1/n * sum_i max(0, 1 - y_i (w.x_i + b))
//! ```
//!
//! with step `1 / (lambda * t)`, projection onto the ball of radius
//! `1 / sqrt(lambda)` and the average of all iterates as the returned model.
//! The bias is a constant unit feature and is regularized with the weights.
//!
//! The iterate is stored as `w = s * v` so the per-step shrink is O(1). The
//! running sum of iterates is `S_T * v_T - u`, where `S_T` is the sum of the
//! scales and `u` accumulates each sparse update times the scale sum before
//! it, which keeps averaging O(nnz) per step as well. When `s` falls below
//! `RESCALE_BELOW` the partial sum is flushed into a dense accumulator and
//! the scale is folded back into `v`, bounding cancellation in `S_T * v_T - u`.

use serde::{Deserialize, Serialize};

use super::{check_rows, sigmoid, BinaryClassifier};
use crate::error::LearnError;
use crate::features::SparseVector;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearSvm {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// Regularized hinge objective on a data set, `y` in {false, true} ~ {-1, +1}.
    pub fn objective(&self, x: &[SparseVector], y: &[bool], lambda: f64) -> f64 {
        objective(&self.weights, self.bias, x, y, lambda)
    }
}

pub fn objective(w: &[f64], b: f64, x: &[SparseVector], y: &[bool], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let sign = if label { 1.0 } else { -1.0 };
            (1.0 - sign * (row.dot(w) + b)).max(0.0)
        })
        .sum();
    reg + hinge / x.len() as f64
}

const RESCALE_BELOW: f64 = 1e-4;

pub fn fit_linear_svm(
    x: &[SparseVector],
    y: &[bool],
    params: SvmParams,
    seed: u64,
) -> Result<LinearSvm, LearnError> {
    if !(params.lambda > 0.0) || params.epochs == 0 {
        return Err(LearnError::InvalidConfig(format!(
            "svm needs lambda > 0 and epochs >= 1, got {params:?}"
        )));
    }
    let dim = check_rows(x, y)?;
    if x.iter()
        .any(|r| r.entries().iter().any(|(_, v)| !v.is_finite()))
    {
        return Err(LearnError::NonFiniteFeature);
    }
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let bias = dim;

    let mut v = vec![0.0; dim + 1];
    let mut u = vec![0.0; dim + 1];
    let mut v_sq = 0.0;
    let mut s = 1.0;
    let mut scale_sum = 0.0;
    let mut t = 0u64;
    let mut acc = vec![0.0; dim + 1];

    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let sign = if y[i] { 1.0 } else { -1.0 };
            let row = &x[i];
            let margin = sign * s * (row.dot(&v) + v[bias]);

            let shrink = 1.0 - eta * lambda;
            if shrink == 0.0 {
                // first step: w collapses to zero, and v is still zero
                s = 1.0;
            } else {
                s *= shrink;
            }

            if margin < 1.0 {
                let step = eta * sign / s;
                let mut cross = v[bias] * step;
                let mut step_sq = step * step;
                for &(j, xj) in row.entries() {
                    cross += v[j] * step * xj;
                    step_sq += (step * xj) * (step * xj);
                }
                v_sq += 2.0 * cross + step_sq;
                for &(j, xj) in row.entries() {
                    v[j] += step * xj;
                    u[j] += step * xj * scale_sum;
                }
                v[bias] += step;
                u[bias] += step * scale_sum;
            }

            let norm = s * v_sq.max(0.0).sqrt();
            if norm > radius {
                s *= radius / norm;
            }
            scale_sum += s;

            if s < RESCALE_BELOW {
                for j in 0..=dim {
                    acc[j] += scale_sum * v[j] - u[j];
                    v[j] *= s;
                    u[j] = 0.0;
                }
                v_sq *= s * s;
                s = 1.0;
                scale_sum = 0.0;
            }
        }
    }

    let total = t as f64;
    let mut avg: Vec<f64> = (0..=dim)
        .map(|j| (acc[j] + scale_sum * v[j] - u[j]) / total)
        .collect();
    let bias_weight = avg.pop().unwrap();
    Ok(LinearSvm {
        weights: avg,
        bias: bias_weight,
    })
}

impl BinaryClassifier for LinearSvm {
    fn score(&self, x: &SparseVector) -> f64 {
        sigmoid(self.margin(x))
    }

    fn dim(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d() -> (Vec<SparseVector>, Vec<bool>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..10 {
            x.push(SparseVector::from_dense(&[1.0]).unwrap());
            y.push(true);
            x.push(SparseVector::from_dense(&[-1.0]).unwrap());
            y.push(false);
        }
        (x, y)
    }

    fn accuracy(m: &LinearSvm, x: &[SparseVector], y: &[bool]) -> f64 {
        x.iter()
            .zip(y)
            .filter(|(r, l)| m.decide(r, 0.5) == **l)
            .count() as f64
            / x.len() as f64
    }

    /// Full-batch subgradient descent with a small fixed step, no tricks.
    fn batch_oracle(x: &[SparseVector], y: &[bool], lambda: f64, dim: usize) -> (Vec<f64>, f64) {
        let (mut w, mut b) = (vec![0.0; dim], 0.0);
        for _ in 0..20_000 {
            let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
            let mut gb = lambda * b;
            for (row, &l) in x.iter().zip(y) {
                let sign = if l { 1.0 } else { -1.0 };
                if sign * (row.dot(&w) + b) < 1.0 {
                    for &(j, v) in row.entries() {
                        gw[j] -= sign * v / x.len() as f64;
                    }
                    gb -= sign / x.len() as f64;
                }
            }
            for j in 0..dim {
                w[j] -= 1e-3 * gw[j];
            }
            b -= 1e-3 * gb;
        }
        (w, b)
    }

    #[test]
    fn separable_one_d_set_reaches_full_accuracy() {
        let (x, y) = one_d();
        let (w, b) = batch_oracle(&x, &y, 1e-4, 1);
        let oracle_acc = x
            .iter()
            .zip(&y)
            .filter(|(r, l)| (r.dot(&w) + b >= 0.0) == **l)
            .count();
        assert_eq!(oracle_acc, 20);

        let m = fit_linear_svm(&x, &y, SvmParams::default(), 0).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        assert!(m.weights()[0] > 0.0);
    }

    #[test]
    fn averaged_objective_beats_zero_vector() {
        let (x, y) = one_d();
        let zero = objective(&[0.0], 0.0, &x, &y, 1e-4);
        assert_eq!(zero, 1.0);
        let m = fit_linear_svm(&x, &y, SvmParams::default(), 3).unwrap();
        assert!(m.objective(&x, &y, 1e-4) <= zero);
    }

    #[test]
    fn equal_seeds_give_identical_weights() {
        let (x, y) = one_d();
        let a = fit_linear_svm(&x, &y, SvmParams::default(), 11).unwrap();
        let b = fit_linear_svm(&x, &y, SvmParams::default(), 11).unwrap();
        assert_eq!(a.weights()[0].to_bits(), b.weights()[0].to_bits());
        assert_eq!(a.bias().to_bits(), b.bias().to_bits());
    }

    /// Same schedule with an explicit dense iterate and running sum.
    fn dense_reference(x: &[SparseVector], y: &[bool], params: SvmParams, seed: u64) -> Vec<f64> {
        let dim = x[0].dim();
        let mut rng = SeededRng::new(seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut w = vec![0.0; dim + 1];
        let mut sum = vec![0.0; dim + 1];
        let mut t = 0.0;
        for _ in 0..params.epochs {
            rng.shuffle(&mut order);
            for &i in &order {
                t += 1.0;
                let eta = 1.0 / (params.lambda * t);
                let sign = if y[i] { 1.0 } else { -1.0 };
                let xi: Vec<f64> = (0..dim).map(|j| x[i].get(j)).chain([1.0]).collect();
                let m: f64 = sign * w.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>();
                for j in 0..=dim {
                    w[j] *= 1.0 - eta * params.lambda;
                    if m < 1.0 {
                        w[j] += eta * sign * xi[j];
                    }
                }
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = 1.0 / params.lambda.sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|v| *v *= radius / norm);
                }
                for j in 0..=dim {
                    sum[j] += w[j];
                }
            }
        }
        sum.iter().map(|v| v / t).collect()
    }

    #[test]
    fn averaging_matches_a_dense_reference() {
        let x: Vec<SparseVector> = [
            [1.0, 0.0, 2.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
        .iter()
        .map(|r| SparseVector::from_dense(r).unwrap())
        .collect();
        let y = [true, false, true, false];
        for (lambda, epochs) in [(0.1, 5), (1e-4, 400)] {
            let params = SvmParams { lambda, epochs };
            let fast = fit_linear_svm(&x, &y, params, 9).unwrap();
            let reference = dense_reference(&x, &y, params, 9);
            let got: Vec<f64> = fast
                .weights()
                .iter()
                .copied()
                .chain([fast.bias()])
                .collect();
            for (j, (a, b)) in got.iter().zip(&reference).enumerate() {
                assert!(
                    (a - b).abs() <= 1e-8 * b.abs().max(1.0),
                    "lambda {lambda} w[{j}]: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (x, _) = one_d();
        assert_eq!(
            fit_linear_svm(&x, &[true; 20], SvmParams::default(), 0),
            Err(LearnError::SingleClass)
        );
        let bad = SvmParams {
            lambda: 0.0,
            epochs: 1,
        };
        assert!(matches!(
            fit_linear_svm(&x, &[true; 20], bad, 0),
            Err(LearnError::InvalidConfig(_))
        ));
    }
}
