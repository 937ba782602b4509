//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Objective: mean softmax cross-entropy + `(l2 / 2) ‖W‖²` (biases are not
//! penalized). With `l1 > 0` every gradient step is followed by a
//! soft-threshold of the weights by `step · l1` (proximal gradient). The step
//! starts at `lr` and is halved whenever a step would raise the objective,
//! so the objective never increases between epochs.

use rayon::prelude::*;

use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::featurex::{FeatureMatrix, Rows};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub l1: f64,
    pub lr: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            l1: 0.0,
            lr: 0.1,
            max_epochs: 500,
            tol: 1e-5,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub(crate) dim: usize,
    pub(crate) n_classes: usize,
    /// `K × D`, row-major, in standardized feature space when a
    /// standardizer is present.
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
    pub(crate) l2: f64,
    pub(crate) l1: f64,
    pub(crate) standardizer: Option<Standardizer>,
}

/// What happened during [`logreg_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
    pub converged: bool,
    pub final_step: f64,
}

/// Rows per parallel work unit; fixed so that the reduction order, and hence
/// every floating-point sum, does not depend on the thread count.
const CHUNK_ROWS: usize = 32;
const MAX_HALVINGS: usize = 60;

/// The smooth part of the training objective over a fixed data set.
pub struct SoftmaxObjective<'a> {
    x: Rows<'a>,
    labels: &'a [u32],
    n_classes: usize,
    l2: f64,
    standardizer: Option<&'a Standardizer>,
}

struct Partial {
    loss: f64,
    grad_w: Vec<f64>,
    grad_b: Vec<f64>,
}

impl<'a> SoftmaxObjective<'a> {
    pub fn new(
        x: Rows<'a>,
        labels: &'a [u32],
        n_classes: usize,
        l2: f64,
        standardizer: Option<&'a Standardizer>,
    ) -> Result<Self> {
        if labels.len() != x.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} labels",
                x.len(),
                labels.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::DegenerateInput("objective over zero rows".into()));
        }
        Ok(Self {
            x,
            labels,
            n_classes,
            l2,
            standardizer,
        })
    }

    fn features(&self, row: &[f32], buf: &mut [f64]) {
        match self.standardizer {
            Some(s) => s.apply_row(row, buf),
            None => buf.iter_mut().zip(row).for_each(|(b, &v)| *b = f64::from(v)),
        }
    }

    fn chunk(&self, start: usize, end: usize, w: &[f64], b: &[f64], with_grad: bool) -> Partial {
        let (k, dim) = (self.n_classes, self.x.dim());
        let mut z = vec![0f64; dim];
        let mut scores = vec![0f64; k];
        let mut out = Partial {
            loss: 0.0,
            grad_w: if with_grad { vec![0f64; k * dim] } else { Vec::new() },
            grad_b: vec![0f64; k],
        };
        for i in start..end {
            self.features(self.x.row(i), &mut z);
            for c in 0..k {
                scores[c] = b[c] + dot(&w[c * dim..][..dim], &z);
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            let log_norm = max + sum_exp.ln();
            let y = self.labels[i] as usize;
            out.loss += log_norm - scores[y];
            if with_grad {
                for c in 0..k {
                    let residual = (scores[c] - log_norm).exp() - if c == y { 1.0 } else { 0.0 };
                    out.grad_b[c] += residual;
                    for (g, zd) in out.grad_w[c * dim..][..dim].iter_mut().zip(&z) {
                        *g += residual * zd;
                    }
                }
            }
        }
        out
    }

    fn evaluate(&self, w: &[f64], b: &[f64], with_grad: bool) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.x.len();
        let starts: Vec<usize> = (0..n).step_by(CHUNK_ROWS).collect();
        let partials: Vec<Partial> = starts
            .par_iter()
            .map(|&s| self.chunk(s, (s + CHUNK_ROWS).min(n), w, b, with_grad))
            .collect();
        let mut loss = 0f64;
        let mut grad_w = if with_grad { vec![0f64; w.len()] } else { Vec::new() };
        let mut grad_b = vec![0f64; b.len()];
        for p in partials {
            loss += p.loss;
            if with_grad {
                grad_w.iter_mut().zip(&p.grad_w).for_each(|(g, v)| *g += v);
                grad_b.iter_mut().zip(&p.grad_b).for_each(|(g, v)| *g += v);
            }
        }
        let inv_n = 1.0 / n as f64;
        let penalty = 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        if with_grad {
            grad_w
                .iter_mut()
                .zip(w)
                .for_each(|(g, wv)| *g = *g * inv_n + self.l2 * wv);
            grad_b.iter_mut().for_each(|g| *g *= inv_n);
        }
        (loss * inv_n + penalty, grad_w, grad_b)
    }

    /// Mean cross-entropy plus the L2 penalty.
    pub fn loss(&self, weights: &[f64], biases: &[f64]) -> f64 {
        self.evaluate(weights, biases, false).0
    }

    /// Loss with its gradient with respect to the weights (`K × D`) and the
    /// biases (`K`).
    pub fn loss_and_gradient(&self, weights: &[f64], biases: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        self.evaluate(weights, biases, true)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn l1_norm(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

pub fn logreg_fit(x: &FeatureMatrix, params: &LogRegParams) -> Result<LogRegModel> {
    logreg_train(x, params).map(|(model, _)| model)
}

/// Trains from zero-initialized parameters and reports the loss trajectory
/// end points.
pub fn logreg_train(x: &FeatureMatrix, params: &LogRegParams) -> Result<(LogRegModel, TrainingSummary)> {
    let k = x.n_classes() as usize;
    let dim = x.dim();
    for (name, v) in [("l2", params.l2), ("l1", params.l1), ("tol", params.tol)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "{name} must be a finite value >= 0"
            )));
        }
    }
    if !(params.lr > 0.0 && params.lr.is_finite()) {
        return Err(Error::InvalidHyperparameter("lr must be positive".into()));
    }
    if x.rows() < k {
        return Err(Error::InvalidHyperparameter(format!(
            "logistic regression needs at least as many rows ({}) as classes ({k})",
            x.rows()
        )));
    }

    let standardizer = if params.standardize {
        Some(Standardizer::fit(x.view())?)
    } else {
        None
    };
    let objective = SoftmaxObjective::new(x.view(), x.labels(), k, params.l2, standardizer.as_ref())?;
    let full = |loss: f64, w: &[f64]| loss + params.l1 * l1_norm(w);

    let mut w = vec![0f64; k * dim];
    let mut b = vec![0f64; k];
    let (loss, mut grad_w, mut grad_b) = objective.loss_and_gradient(&w, &b);
    let mut value = full(loss, &w);
    let initial_loss = value;
    let mut step = params.lr;
    let mut epochs = 0;
    let mut converged = false;
    let mut halvings = 0;

    loop {
        let w_next: Vec<f64> = w
            .iter()
            .zip(&grad_w)
            .map(|(wv, g)| {
                let v = wv - step * g;
                if params.l1 > 0.0 {
                    soft_threshold(v, step * params.l1)
                } else {
                    v
                }
            })
            .collect();
        let b_next: Vec<f64> = b.iter().zip(&grad_b).map(|(bv, g)| bv - step * g).collect();

        // Gradient mapping; equals the plain gradient when l1 = 0.
        let mapping = w
            .iter()
            .zip(&w_next)
            .chain(b.iter().zip(&b_next))
            .map(|(a, c)| ((a - c) / step).abs())
            .fold(0f64, f64::max);
        if mapping < params.tol {
            converged = true;
            break;
        }
        if epochs >= params.max_epochs {
            break;
        }

        let (loss_next, gw_next, gb_next) = objective.loss_and_gradient(&w_next, &b_next);
        let value_next = full(loss_next, &w_next);
        if !value_next.is_finite() || value_next > value {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                if !value_next.is_finite() {
                    return Err(Error::TrainingDiverged {
                        epoch: epochs,
                        loss: value_next,
                    });
                }
                break;
            }
            step *= 0.5;
            continue;
        }
        halvings = 0;
        w = w_next;
        b = b_next;
        grad_w = gw_next;
        grad_b = gb_next;
        value = value_next;
        epochs += 1;
    }

    if w.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::TrainingDiverged {
            epoch: epochs,
            loss: value,
        });
    }
    let model = LogRegModel {
        dim,
        n_classes: k,
        weights: w,
        biases: b,
        l2: params.l2,
        l1: params.l1,
        standardizer,
    };
    let summary = TrainingSummary {
        initial_loss,
        final_loss: value,
        epochs,
        converged,
        final_step: step,
    };
    Ok((model, summary))
}

impl LogRegModel {
    /// Untrained model with all parameters zero.
    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        Self {
            dim,
            n_classes,
            weights: vec![0.0; dim * n_classes],
            biases: vec![0.0; n_classes],
            l2: 0.0,
            l1: 0.0,
            standardizer: None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn probabilities_row(&self, row: &[f32], z: &mut [f64]) -> Vec<f64> {
        match &self.standardizer {
            Some(s) => s.apply_row(row, z),
            None => z.iter_mut().zip(row).for_each(|(o, &v)| *o = f64::from(v)),
        }
        let scores: Vec<f64> = (0..self.n_classes)
            .map(|c| self.biases[c] + dot(&self.weights[c * self.dim..][..self.dim], z))
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// `M × K` class probabilities, row-major.
    pub fn predict_proba(&self, q: Rows<'_>) -> Result<Vec<f64>> {
        q.expect_dim(self.dim)?;
        let rows: Vec<&[f32]> = q.iter().collect();
        Ok(rows
            .par_iter()
            .flat_map_iter(|row| {
                let mut z = vec![0f64; self.dim];
                self.probabilities_row(row, &mut z)
            })
            .collect())
    }

    pub fn predict(&self, q: Rows<'_>) -> Result<Vec<u32>> {
        let p = self.predict_proba(q)?;
        Ok(p.chunks_exact(self.n_classes).map(super::argmax).collect())
    }
}
