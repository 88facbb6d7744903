//! Two-class multinomial Naive Bayes over raw term counts.

use serde::{Deserialize, Serialize};

use super::{check_rows, sigmoid, BinaryClassifier};
use crate::error::LearnError;
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    /// ln P(class), index 0 = negative, 1 = positive
    log_prior: [f64; 2],
    /// ln P(feature | class) with additive smoothing
    log_likelihood: [Vec<f64>; 2],
    dim: usize,
}

/// Fits class priors `ln(n_c / n)` and likelihoods
/// `ln((count_cj + alpha) / (total_c + alpha * V))`.
pub fn fit_mnb(x: &[SparseVector], y: &[bool], alpha: f64) -> Result<MultinomialNb, LearnError> {
    if !(alpha > 0.0) {
        return Err(LearnError::InvalidConfig(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    let dim = check_rows(x, y)?;
    let mut class_count = [0usize; 2];
    let mut feature_count = [vec![0.0; dim], vec![0.0; dim]];
    for (row, &label) in x.iter().zip(y) {
        let c = label as usize;
        class_count[c] += 1;
        for &(j, v) in row.entries() {
            if v < 0.0 {
                return Err(LearnError::InvalidConfig(
                    "multinomial features must be non-negative".into(),
                ));
            }
            feature_count[c][j] += v;
        }
    }
    let n = y.len() as f64;
    let log_prior = [
        (class_count[0] as f64 / n).ln(),
        (class_count[1] as f64 / n).ln(),
    ];
    let log_likelihood = feature_count.map(|counts| {
        let total: f64 = counts.iter().sum();
        let denom = total + alpha * dim as f64;
        counts.iter().map(|c| ((c + alpha) / denom).ln()).collect()
    });
    Ok(MultinomialNb {
        log_prior,
        log_likelihood,
        dim,
    })
}

impl MultinomialNb {
    pub fn log_prior(&self, positive: bool) -> f64 {
        self.log_prior[positive as usize]
    }

    pub fn log_likelihood(&self, positive: bool, feature: usize) -> f64 {
        self.log_likelihood[positive as usize][feature]
    }

    pub fn log_posterior(&self, x: &SparseVector, positive: bool) -> f64 {
        let c = positive as usize;
        self.log_prior[c] + x.dot(&self.log_likelihood[c])
    }
}

impl BinaryClassifier for MultinomialNb {
    /// Logistic of the positive-minus-negative log-posterior margin, so 0.5
    /// is the MAP boundary.
    fn score(&self, x: &SparseVector) -> f64 {
        sigmoid(self.log_posterior(x, true) - self.log_posterior(x, false))
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // columns: bad, side, good
    fn toy() -> (Vec<SparseVector>, Vec<bool>) {
        (
            vec![
                SparseVector::from_dense(&[1.0, 1.0, 0.0]).unwrap(),
                SparseVector::from_dense(&[0.0, 0.0, 1.0]).unwrap(),
            ],
            vec![true, false],
        )
    }

    #[test]
    fn hand_computed_likelihood_and_decision() {
        let (x, y) = toy();
        let m = fit_mnb(&x, &y, 1.0).unwrap();
        assert!((m.log_likelihood(true, 0).exp() - 0.4).abs() < 1e-12);
        assert!((m.log_likelihood(false, 0).exp() - 0.25).abs() < 1e-12);
        let doc = SparseVector::from_dense(&[1.0, 0.0, 0.0]).unwrap();
        let pos = 0.5f64.ln() + 0.4f64.ln();
        let neg = 0.5f64.ln() + 0.25f64.ln();
        assert!((m.log_posterior(&doc, true) - pos).abs() < 1e-12);
        assert!((m.log_posterior(&doc, false) - neg).abs() < 1e-12);
        assert!(m.decide(&doc, 0.5));
    }

    #[test]
    fn duplicated_training_set_keeps_decisions() {
        let (x, y) = toy();
        let m1 = fit_mnb(&x, &y, 1.0).unwrap();
        let x2: Vec<_> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<_> = y.iter().chain(&y).copied().collect();
        let m2 = fit_mnb(&x2, &y2, 1.0).unwrap();
        for probe in [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [2.0, 0.0, 1.0],
        ] {
            let p = SparseVector::from_dense(&probe).unwrap();
            assert_eq!(m1.decide(&p, 0.5), m2.decide(&p, 0.5));
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let (x, _) = toy();
        assert_eq!(
            fit_mnb(&x, &[true, true], 1.0),
            Err(LearnError::SingleClass)
        );
        assert!(fit_mnb(&x, &[true, false], 0.0).is_err());
    }
}
