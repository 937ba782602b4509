//! Independent reference implementations used to check the classifiers.
//! Each oracle is written the slow, obvious way and shares no code with the
//! library beyond its public types.

#![allow(dead_code)]

use citrusfx::classify::{DecisionTree, TreeNode};
use citrusfx::featurex::FeatureMatrix;
use citrusfx::rng::SeededRng;

pub fn random_matrix(rng: &mut SeededRng, n: usize, d: usize, k: u32) -> FeatureMatrix {
    let values = (0..n * d).map(|_| (rng.normal() * 2.0) as f32).collect();
    let mut labels: Vec<u32> = (0..n).map(|i| (i % k as usize) as u32).collect();
    rng.shuffle(&mut labels);
    FeatureMatrix::new(d, k, values, labels, "oracle").unwrap()
}

pub fn random_queries(rng: &mut SeededRng, m: usize, d: usize) -> Vec<f32> {
    (0..m * d).map(|_| (rng.normal() * 2.0) as f32).collect()
}

/// Exhaustive KNN: every distance, full sort, documented tie rules.
pub fn brute_force_knn(x: &FeatureMatrix, k: usize, query: &[f32]) -> u32 {
    let mut all: Vec<(f64, usize)> = (0..x.rows())
        .map(|i| {
            let d: f64 = x
                .row(i)
                .iter()
                .zip(query)
                .map(|(&a, &b)| {
                    let diff = f64::from(a) - f64::from(b);
                    diff * diff
                })
                .sum();
            (d, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let classes = x.n_classes() as usize;
    let mut votes = vec![0usize; classes];
    let mut dist = vec![0f64; classes];
    for &(d, i) in &all[..k] {
        let c = x.labels()[i] as usize;
        votes[c] += 1;
        dist[c] += d;
    }
    let mut best = 0;
    for c in 1..classes {
        if votes[c] > votes[best] || (votes[c] == votes[best] && dist[c] < dist[best]) {
            best = c;
        }
    }
    best as u32
}

/// Gaussian NB log posteriors computed from the textbook formulas, two-pass
/// statistics over each class's rows.
pub fn closed_form_nb(x: &FeatureMatrix, query: &[f32]) -> Vec<f64> {
    let (n, d, k) = (x.rows(), x.dim(), x.n_classes() as usize);
    let column = |j: usize, class: Option<u32>| -> Vec<f64> {
        (0..n)
            .filter(|&i| class.is_none_or(|c| x.labels()[i] == c))
            .map(|i| f64::from(x.row(i)[j]))
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64
    };
    let max_pooled = (0..d).map(|j| var(&column(j, None))).fold(0.0, f64::max);
    let eps = if max_pooled > 0.0 { 1e-9 * max_pooled } else { 1e-9 };
    (0..k as u32)
        .map(|c| {
            let count = x.labels().iter().filter(|&&l| l == c).count();
            let mut score = (count as f64 / n as f64).ln();
            for j in 0..d {
                let values = column(j, Some(c));
                let (m, v) = (mean(&values), var(&values) + eps);
                let q = f64::from(query[j]);
                score += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (q - m) * (q - m) / (2.0 * v);
            }
            score
        })
        .collect()
}

/// Walks one tree by following node indices.
pub fn walk_tree(tree: &DecisionTree, row: &[f32]) -> u32 {
    let nodes = tree.nodes();
    let mut at = 0usize;
    loop {
        match &nodes[at] {
            TreeNode::Leaf { class } => return *class,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                at = if f64::from(row[*feature as usize]) <= *threshold {
                    *left as usize
                } else {
                    *right as usize
                };
            }
        }
    }
}

/// Plurality of per-tree votes, lowest class on ties.
pub fn recount_votes(trees: &[DecisionTree], n_classes: usize, row: &[f32]) -> u32 {
    let mut votes = vec![0usize; n_classes];
    for t in trees {
        votes[walk_tree(t, row) as usize] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap() as u32
}

/// Largest relative error between an analytic gradient and central
/// differences of `f`, with `|a - n| / max(1, |a|, |n|)`.
pub fn max_gradient_error(params: &[f64], analytic: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut worst = 0f64;
    let mut p = params.to_vec();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = f(&p);
        p[i] = orig - h;
        let down = f(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = 1f64.max(analytic[i].abs()).max(numeric.abs());
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

/// Four Gaussian blobs at the corners of a square, labelled XOR-style.
pub fn xor_blobs(per_blob: usize, seed: u64) -> FeatureMatrix {
    let mut rng = SeededRng::new(seed);
    let centres = [(-2.0, -2.0, 0), (2.0, 2.0, 0), (-2.0, 2.0, 1), (2.0, -2.0, 1)];
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for &(cx, cy, class) in &centres {
        for _ in 0..per_blob {
            values.push((cx + 0.5 * rng.normal()) as f32);
            values.push((cy + 0.5 * rng.normal()) as f32);
            labels.push(class);
        }
    }
    FeatureMatrix::new(2, 2, values, labels, "xor").unwrap()
}
