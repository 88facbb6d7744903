//! Random forest of CART trees with Gini splits.
//!
//! Each tree sees a bootstrap resample and considers `ceil(sqrt(dim))`
//! candidate features per node, drawn from the features that are not
//! constant within the node. The forest score is the fraction of trees
//! whose leaf votes positive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_rows, BinaryClassifier};
use crate::error::LearnError;
use crate::features::SparseVector;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_split: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(dim))`.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 32,
            min_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        vote: bool,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn vote(&self, x: &SparseVector) -> bool {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { vote } => return *vote,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    dim: usize,
    /// Out-of-bag accuracy over samples left out by at least one tree.
    oob_accuracy: Option<f64>,
}

impl RandomForest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn oob_accuracy(&self) -> Option<f64> {
        self.oob_accuracy
    }
}

impl BinaryClassifier for RandomForest {
    fn score(&self, x: &SparseVector) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        votes as f64 / self.trees.len() as f64
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

pub fn fit_random_forest(
    x: &[SparseVector],
    y: &[bool],
    params: &ForestParams,
    seed: u64,
) -> Result<RandomForest, LearnError> {
    if params.trees == 0 || params.max_depth == 0 || params.min_split < 2 {
        return Err(LearnError::InvalidConfig(format!(
            "bad forest parameters {params:?}"
        )));
    }
    let dim = check_rows(x, y)?;
    let mtry = params
        .max_features
        .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
        .max(1);

    let grown: Vec<(Tree, Vec<bool>)> = (0..params.trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = SeededRng::derive(seed, k as u64);
            let n = x.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            let mut in_bag = vec![false; n];
            for &i in &sample {
                in_bag[i] = true;
            }
            let tree = TreeBuilder {
                x,
                y,
                params,
                mtry,
                rng,
            }
            .build(sample);
            (tree, in_bag)
        })
        .collect();

    let mut oob_votes = vec![(0usize, 0usize); x.len()];
    for (tree, in_bag) in &grown {
        for (i, row) in x.iter().enumerate() {
            if !in_bag[i] {
                oob_votes[i].0 += tree.vote(row) as usize;
                oob_votes[i].1 += 1;
            }
        }
    }
    let scored: Vec<bool> = oob_votes
        .iter()
        .zip(y)
        .filter(|((_, total), _)| *total > 0)
        .map(|(&(pos, total), &label)| (2 * pos > total) == label)
        .collect();
    let oob_accuracy = (!scored.is_empty())
        .then(|| scored.iter().filter(|ok| **ok).count() as f64 / scored.len() as f64);

    Ok(RandomForest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        dim,
        oob_accuracy,
    })
}

struct TreeBuilder<'a> {
    x: &'a [SparseVector],
    y: &'a [bool],
    params: &'a ForestParams,
    mtry: usize,
    rng: SeededRng,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_weighted(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    // n * (1 - p^2 - q^2)
    total as f64 * 2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    fn build(mut self, sample: Vec<usize>) -> Tree {
        let mut nodes = vec![Node::Leaf { vote: false }];
        let mut stack = vec![(0usize, sample, 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let pos = rows.iter().filter(|&&i| self.y[i]).count();
            let pure = pos == 0 || pos == rows.len();
            let split =
                if pure || depth >= self.params.max_depth || rows.len() < self.params.min_split {
                    None
                } else {
                    self.best_split(&rows)
                };
            match split {
                None => {
                    nodes[slot] = Node::Leaf {
                        vote: 2 * pos > rows.len(),
                    }
                }
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows
                        .iter()
                        .partition(|&&i| self.x[i].get(s.feature) <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { vote: false });
                    nodes.push(Node::Leaf { vote: false });
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let mut candidates: Vec<usize> = rows
            .iter()
            .flat_map(|&i| self.x[i].entries().iter().map(|e| e.0))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        self.rng.shuffle(&mut candidates);

        let total_pos = rows.iter().filter(|&&i| self.y[i]).count();
        let mut best: Option<Split> = None;
        let mut evaluated = 0;
        let mut values: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
        for feature in candidates {
            if evaluated == self.mtry {
                break;
            }
            values.clear();
            values.extend(rows.iter().map(|&i| (self.x[i].get(feature), self.y[i])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[values.len() - 1].0 {
                continue;
            }
            evaluated += 1;
            let mut left_pos = 0;
            for k in 1..values.len() {
                left_pos += values[k - 1].1 as usize;
                if values[k].0 == values[k - 1].0 {
                    continue;
                }
                let impurity = gini_weighted(left_pos, k)
                    + gini_weighted(total_pos - left_pos, values.len() - k);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Split {
                        feature,
                        threshold: 0.5 * (values[k - 1].0 + values[k].0),
                        impurity,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_feature(n: usize) -> (Vec<SparseVector>, Vec<bool>) {
        (0..n)
            .map(|i| {
                let on = i % 2 == 0;
                (
                    SparseVector::from_dense(&[if on { 1.0 } else { 0.0 }]).unwrap(),
                    on,
                )
            })
            .unzip()
    }

    #[test]
    fn depth_one_oracle_separates_the_toy() {
        // exhaustive stump search over the only feature
        let (x, y) = single_feature(20);
        let stump = |t: f64| {
            x.iter()
                .zip(&y)
                .filter(|(r, l)| (r.get(0) > t) == **l)
                .count()
        };
        assert_eq!(stump(0.5), 20);
    }

    #[test]
    fn single_informative_feature_gives_perfect_oob() {
        let (x, y) = single_feature(20);
        let params = ForestParams {
            trees: 25,
            ..Default::default()
        };
        let f = fit_random_forest(&x, &y, &params, 5).unwrap();
        assert_eq!(f.oob_accuracy(), Some(1.0));
        for (r, l) in x.iter().zip(&y) {
            assert_eq!(f.decide(r, 0.5), *l);
        }
    }

    #[test]
    fn scores_are_vote_fractions_and_deterministic() {
        let x: Vec<SparseVector> = (0..40)
            .map(|i| {
                SparseVector::from_dense(&[(i % 7) as f64, (i % 3) as f64, (i % 5) as f64]).unwrap()
            })
            .collect();
        let y: Vec<bool> = (0..40).map(|i| (i * 7 + 3) % 11 < 5).collect();
        let params = ForestParams {
            trees: 15,
            ..Default::default()
        };
        let a = fit_random_forest(&x, &y, &params, 1).unwrap();
        let b = fit_random_forest(&x, &y, &params, 1).unwrap();
        assert_eq!(a, b);
        for r in &x {
            let s = a.score(r);
            assert!((0.0..=1.0).contains(&s));
            assert_eq!((s * 15.0).round(), s * 15.0);
        }
    }

    #[test]
    fn depth_is_capped() {
        let x: Vec<SparseVector> = (0..64)
            .map(|i| SparseVector::from_dense(&[i as f64]).unwrap())
            .collect();
        let y: Vec<bool> = (0..64).map(|i| i % 2 == 0).collect();
        let params = ForestParams {
            trees: 3,
            max_depth: 4,
            ..Default::default()
        };
        let f = fit_random_forest(&x, &y, &params, 0).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 4));
    }

    #[test]
    fn single_class_is_rejected() {
        let (x, _) = single_feature(4);
        assert_eq!(
            fit_random_forest(&x, &[false; 4], &ForestParams::default(), 0),
            Err(LearnError::SingleClass)
        );
    }
}
