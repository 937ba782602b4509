use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::featurex::{FeatureMatrix, Rows};

/// Variance smoothing factor, relative to the largest pooled feature
/// variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

/// Gaussian naive Bayes with per-class feature means and smoothed biased
/// variances. Scoring is done entirely in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNbModel {
    pub(crate) dim: usize,
    pub(crate) epsilon: f64,
    pub(crate) class_log_priors: Vec<f64>,
    /// `K × D`, row-major.
    pub(crate) means: Vec<f64>,
    /// `K × D`, row-major, smoothing already added.
    pub(crate) variances: Vec<f64>,
}

pub fn nb_fit(x: &FeatureMatrix) -> Result<GaussianNbModel> {
    let k = x.n_classes() as usize;
    let dim = x.dim();
    let n = x.rows();
    let mut counts = vec![0usize; k];
    for &l in x.labels() {
        counts[l as usize] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(missing as u32));
    }

    let mut means = vec![0f64; k * dim];
    let mut pooled_mean = vec![0f64; dim];
    for (row, &label) in x.view().iter().zip(x.labels()) {
        let m = &mut means[label as usize * dim..][..dim];
        for ((m, p), &v) in m.iter_mut().zip(pooled_mean.iter_mut()).zip(row) {
            *m += f64::from(v);
            *p += f64::from(v);
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        means[c * dim..][..dim].iter_mut().for_each(|m| *m /= count as f64);
    }
    pooled_mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut variances = vec![0f64; k * dim];
    let mut pooled_var = vec![0f64; dim];
    for (row, &label) in x.view().iter().zip(x.labels()) {
        let c = label as usize;
        let var = &mut variances[c * dim..][..dim];
        let mean = &means[c * dim..][..dim];
        for d in 0..dim {
            let v = f64::from(row[d]);
            var[d] += (v - mean[d]).powi(2);
            pooled_var[d] += (v - pooled_mean[d]).powi(2);
        }
    }
    let max_pooled = pooled_var.iter().map(|s| s / n as f64).fold(0f64, f64::max);
    // All-constant data would give a zero smoothing term; fall back to the
    // bare factor so variances stay positive.
    let epsilon = if max_pooled > 0.0 {
        VAR_SMOOTHING * max_pooled
    } else {
        VAR_SMOOTHING
    };
    for (c, &count) in counts.iter().enumerate() {
        variances[c * dim..][..dim]
            .iter_mut()
            .for_each(|v| *v = *v / count as f64 + epsilon);
    }

    let class_log_priors = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();
    Ok(GaussianNbModel {
        dim,
        epsilon,
        class_log_priors,
        means,
        variances,
    })
}

impl GaussianNbModel {
    pub fn n_classes(&self) -> usize {
        self.class_log_priors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn class_log_priors(&self) -> &[f64] {
        &self.class_log_priors
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Unnormalized log posterior `ln p(c) + Σ_d ln N(x_d; μ_cd, σ²_cd)` for
    /// every class.
    pub fn log_posteriors_row(&self, row: &[f32]) -> Vec<f64> {
        (0..self.n_classes())
            .map(|c| {
                let mean = &self.means[c * self.dim..][..self.dim];
                let var = &self.variances[c * self.dim..][..self.dim];
                let log_likelihood: f64 = row
                    .iter()
                    .zip(mean)
                    .zip(var)
                    .map(|((&x, m), v)| {
                        let d = f64::from(x) - m;
                        -0.5 * (std::f64::consts::TAU * v).ln() - d * d / (2.0 * v)
                    })
                    .sum();
                self.class_log_priors[c] + log_likelihood
            })
            .collect()
    }

    /// `M × K` log posteriors, row-major.
    pub fn log_posteriors(&self, q: Rows<'_>) -> Result<Vec<f64>> {
        q.expect_dim(self.dim)?;
        let rows: Vec<&[f32]> = q.iter().collect();
        Ok(rows
            .par_iter()
            .flat_map_iter(|row| self.log_posteriors_row(row))
            .collect())
    }

    /// Posterior probabilities, normalized with log-sum-exp.
    pub fn predict_proba(&self, q: Rows<'_>) -> Result<Vec<f64>> {
        let mut scores = self.log_posteriors(q)?;
        for row in scores.chunks_exact_mut(self.n_classes()) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_norm = max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|s| *s = (*s - log_norm).exp());
        }
        Ok(scores)
    }

    pub fn predict(&self, q: Rows<'_>) -> Result<Vec<u32>> {
        let scores = self.log_posteriors(q)?;
        Ok(scores.chunks_exact(self.n_classes()).map(super::argmax).collect())
    }
}
