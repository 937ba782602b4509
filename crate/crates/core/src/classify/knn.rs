use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::featurex::{FeatureMatrix, Rows};

/// Lazy k-nearest-neighbour classifier over squared Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub(crate) k: usize,
    pub(crate) dim: usize,
    pub(crate) n_classes: u32,
    pub(crate) features: Vec<f32>,
    pub(crate) labels: Vec<u32>,
}

pub fn knn_fit(x: &FeatureMatrix, k: usize) -> Result<KnnModel> {
    if x.rows() == 0 {
        return Err(Error::DegenerateInput("KNN needs at least one training row".into()));
    }
    if k == 0 || k > x.rows() {
        return Err(Error::InvalidHyperparameter(format!(
            "k = {k} must lie in 1..={}",
            x.rows()
        )));
    }
    Ok(KnnModel {
        k,
        dim: x.dim(),
        n_classes: x.n_classes(),
        features: x.values().to_vec(),
        labels: x.labels().to_vec(),
    })
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum()
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `k` nearest training rows as `(squared distance, index)`, closest
    /// first; equal distances favour the lower training index.
    pub fn neighbors(&self, query: &[f32]) -> Vec<(f64, usize)> {
        let mut dists: Vec<(f64, usize)> = self
            .features
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| (squared_distance(query, row), i))
            .collect();
        let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            dists.truncate(self.k);
        }
        dists.sort_unstable_by(by_distance_then_index);
        dists
    }

    /// Majority vote among the neighbours. Vote ties go to the class with the
    /// smaller summed distance, then to the lower class index.
    pub fn predict_row(&self, query: &[f32]) -> u32 {
        let mut votes = vec![(0usize, 0f64); self.n_classes as usize];
        for (dist, i) in self.neighbors(query) {
            let slot = &mut votes[self.labels[i] as usize];
            slot.0 += 1;
            slot.1 += dist;
        }
        let mut best = 0usize;
        for c in 1..votes.len() {
            let (count, sum) = votes[c];
            let (best_count, best_sum) = votes[best];
            let better = match count.cmp(&best_count) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => sum < best_sum,
            };
            if better {
                best = c;
            }
        }
        best as u32
    }

    pub fn predict(&self, q: Rows<'_>) -> Result<Vec<u32>> {
        q.expect_dim(self.dim)?;
        let rows: Vec<&[f32]> = q.iter().collect();
        Ok(rows.par_iter().map(|row| self.predict_row(row)).collect())
    }
}
