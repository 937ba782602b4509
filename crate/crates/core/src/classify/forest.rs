//! Random forest of Gini-split CART trees.
//!
//! Tree `t` draws from `SeededRng::derive(seed, t)`: first the bootstrap
//! sample (N draws with replacement), then, at every node in depth-first
//! left-first order, `max_features` candidate features without replacement.
//! Trees are independent of each other, so they are grown in parallel with
//! no effect on the result.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::featurex::{FeatureMatrix, Rows};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        class: u32,
    },
    /// Rows with `value <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict_row(&self, row: &[f32]) -> u32 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if f64::from(row[feature as usize]) <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per node; `None` means `floor(sqrt(D))`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    pub(crate) dim: usize,
    pub(crate) n_classes: u32,
    pub(crate) max_features: usize,
    pub(crate) min_samples_split: usize,
    pub(crate) seed: u64,
    pub(crate) trees: Vec<DecisionTree>,
}

pub fn rf_fit(x: &FeatureMatrix, params: &ForestParams) -> Result<RandomForestModel> {
    let dim = x.dim();
    let max_features = params
        .max_features
        .unwrap_or_else(|| ((dim as f64).sqrt().floor() as usize).max(1));
    if params.n_trees == 0 {
        return Err(Error::InvalidHyperparameter("n_trees must be at least 1".into()));
    }
    if max_features == 0 || max_features > dim {
        return Err(Error::InvalidHyperparameter(format!(
            "max_features = {max_features} must lie in 1..={dim}"
        )));
    }
    if params.min_samples_split < 2 {
        return Err(Error::InvalidHyperparameter(
            "min_samples_split must be at least 2".into(),
        ));
    }
    if x.rows() == 0 {
        return Err(Error::DegenerateInput("random forest needs training rows".into()));
    }

    let grower = Grower {
        x,
        n_classes: x.n_classes() as usize,
        max_features,
        min_samples_split: params.min_samples_split,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRng::derive(params.seed, t as u64);
            let n = x.rows();
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            grower.grow(bootstrap, &mut rng)
        })
        .collect();

    Ok(RandomForestModel {
        dim,
        n_classes: x.n_classes(),
        max_features,
        min_samples_split: params.min_samples_split,
        seed: params.seed,
        trees,
    })
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    n_classes: usize,
    max_features: usize,
    min_samples_split: usize,
}

/// Candidate split scored by `S_L / n_L + S_R / n_R` (with `S = Σ_c count_c²`),
/// which is maximal exactly where the weighted child Gini impurity is
/// minimal. Kept as an exact fraction so ties are detected exactly.
#[derive(Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

impl Grower<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &s in samples {
            counts[self.x.labels()[s] as usize] += 1;
        }
        counts
    }

    fn grow(&self, bootstrap: Vec<usize>, rng: &mut SeededRng) -> DecisionTree {
        let mut nodes = vec![TreeNode::Leaf { class: 0 }];
        let mut stack = vec![(0usize, bootstrap)];
        while let Some((slot, samples)) = stack.pop() {
            let counts = self.class_counts(&samples);
            let majority = super::argmax_counts(&counts);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || samples.len() < self.min_samples_split {
                nodes[slot] = TreeNode::Leaf { class: majority };
                continue;
            }
            let mut features = rng.sample_indices(self.x.dim(), self.max_features);
            features.sort_unstable();
            let Some((feature, threshold)) = self.best_split(&samples, &features) else {
                nodes[slot] = TreeNode::Leaf { class: majority };
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| f64::from(self.x.row(s)[feature]) <= threshold);
            let left_slot = nodes.len();
            nodes.push(TreeNode::Leaf { class: 0 });
            nodes.push(TreeNode::Leaf { class: 0 });
            nodes[slot] = TreeNode::Split {
                feature: feature as u32,
                threshold,
                left: left_slot as u32,
                right: left_slot as u32 + 1,
            };
            stack.push((left_slot + 1, right));
            stack.push((left_slot, left));
        }
        DecisionTree { nodes }
    }

    /// Best `(feature, threshold)` over midpoints between consecutive
    /// distinct values; ties keep the lower feature, then the lower
    /// threshold. `None` when every candidate feature is constant.
    fn best_split(&self, samples: &[usize], features: &[usize]) -> Option<(usize, f64)> {
        let n = samples.len();
        let total = self.class_counts(samples);
        let mut best: Option<(SplitScore, usize, f64)> = None;
        let mut pairs: Vec<(f32, u32)> = Vec::with_capacity(n);
        for &f in features {
            pairs.clear();
            pairs.extend(samples.iter().map(|&s| (self.x.row(s)[f], self.x.labels()[s])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            let mut left = vec![0u64; self.n_classes];
            let mut right: Vec<u64> = total.iter().map(|&c| c as u64).collect();
            let mut sq_left: u64 = 0;
            let mut sq_right: u64 = right.iter().map(|c| c * c).sum();
            for i in 0..n - 1 {
                let c = pairs[i].1 as usize;
                sq_left += 2 * left[c] + 1;
                left[c] += 1;
                sq_right -= 2 * right[c] - 1;
                right[c] -= 1;
                if pairs[i].0 == pairs[i + 1].0 {
                    continue;
                }
                let n_left = (i + 1) as u128;
                let n_right = (n - i - 1) as u128;
                let score = SplitScore {
                    num: u128::from(sq_left) * n_right + u128::from(sq_right) * n_left,
                    den: n_left * n_right,
                };
                if best.as_ref().is_none_or(|(b, _, _)| score.beats(b)) {
                    let lo = f64::from(pairs[i].0);
                    let hi = f64::from(pairs[i + 1].0);
                    best = Some((score, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl RandomForestModel {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn predict_row(&self, row: &[f32]) -> u32 {
        let mut votes = vec![0usize; self.n_classes as usize];
        for tree in &self.trees {
            votes[tree.predict_row(row) as usize] += 1;
        }
        super::argmax_counts(&votes)
    }

    pub fn predict(&self, q: Rows<'_>) -> Result<Vec<u32>> {
        q.expect_dim(self.dim)?;
        let rows: Vec<&[f32]> = q.iter().collect();
        Ok(rows.par_iter().map(|row| self.predict_row(row)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n_trees: usize, seed: u64) -> ForestParams {
        ForestParams {
            n_trees,
            seed,
            ..ForestParams::default()
        }
    }

    #[test]
    fn single_class_gives_single_leaves() {
        let x = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]], vec![1, 1, 1], 2).unwrap();
        let model = rf_fit(&x, &params(10, 3)).unwrap();
        for tree in model.trees() {
            assert_eq!(tree.nodes(), [TreeNode::Leaf { class: 1 }]);
        }
    }

    #[test]
    fn threshold_is_midpoint_and_lower_feature_wins_ties() {
        // Both features separate the classes perfectly; feature 0 must win.
        let x = FeatureMatrix::from_rows(
            &[vec![0.0, 10.0], vec![1.0, 11.0], vec![3.0, 13.0], vec![4.0, 14.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let grower = Grower {
            x: &x,
            n_classes: 2,
            max_features: 2,
            min_samples_split: 2,
        };
        assert_eq!(grower.best_split(&[0, 1, 2, 3], &[0, 1]), Some((0, 2.0)));
        assert_eq!(grower.best_split(&[0, 1, 2, 3], &[1]), Some((1, 12.0)));
    }

    #[test]
    fn constant_features_give_no_split() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let grower = Grower {
            x: &x,
            n_classes: 2,
            max_features: 1,
            min_samples_split: 2,
        };
        assert_eq!(grower.best_split(&[0, 1], &[0]), None);
        // Identical rows with different labels end in a majority leaf.
        let model = rf_fit(&x, &params(1, 0)).unwrap();
        assert!(matches!(model.trees()[0].nodes()[0], TreeNode::Leaf { .. }));
    }

    #[test]
    fn same_seed_same_forest() {
        let rows: Vec<Vec<f32>> = (0..40).map(|i| vec![(i % 7) as f32, (i * 13 % 11) as f32]).collect();
        let labels = (0..40).map(|i| (i % 3) as u32).collect();
        let x = FeatureMatrix::from_rows(&rows, labels, 3).unwrap();
        let a = rf_fit(&x, &params(20, 99)).unwrap();
        let b = rf_fit(&x, &params(20, 99)).unwrap();
        assert_eq!(a, b);
        let c = rf_fit(&x, &params(20, 100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hyperparameter_validation() {
        let x = FeatureMatrix::from_rows(&[vec![0.0, 1.0]], vec![0], 1).unwrap();
        assert!(rf_fit(&x, &params(0, 0)).is_err());
        let too_many = ForestParams {
            max_features: Some(3),
            ..params(1, 0)
        };
        assert!(matches!(rf_fit(&x, &too_many), Err(Error::InvalidHyperparameter(_))));
        let tiny_split = ForestParams {
            min_samples_split: 1,
            ..params(1, 0)
        };
        assert!(rf_fit(&x, &tiny_split).is_err());
    }

    #[test]
    fn three_trees_voting_a_a_b() {
        let leaf = |class| DecisionTree {
            nodes: vec![TreeNode::Leaf { class }],
        };
        let model = RandomForestModel {
            dim: 1,
            n_classes: 2,
            max_features: 1,
            min_samples_split: 2,
            seed: 0,
            trees: vec![leaf(0), leaf(0), leaf(1)],
        };
        assert_eq!(model.predict_row(&[0.0]), 0);
        let tie = RandomForestModel {
            trees: vec![leaf(1), leaf(0)],
            ..model
        };
        assert_eq!(tie.predict_row(&[0.0]), 0);
    }
}
