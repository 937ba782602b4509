//! The four classifiers behind one fit/predict interface.
//!
//! Every model is immutable once fitted and can serve concurrent `predict`
//! calls. All argmax and vote ties resolve to the lower class index.

mod forest;
mod knn;
mod logreg;
mod naive_bayes;
mod persist;
mod standardize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::featurex::{FeatureMatrix, Rows};

pub use forest::{rf_fit, DecisionTree, ForestParams, RandomForestModel, TreeNode};
pub use knn::{knn_fit, KnnModel};
pub use logreg::{logreg_fit, logreg_train, LogRegModel, LogRegParams, SoftmaxObjective, TrainingSummary};
pub use naive_bayes::{nb_fit, GaussianNbModel, VAR_SMOOTHING};
pub use persist::{load_model, save_model, MODEL_MAGIC};
pub use standardize::{Standardizer, STD_FLOOR};

/// Index of the largest score; the first one wins ties.
pub(crate) fn argmax(scores: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u32
}

pub(crate) fn argmax_counts(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

fn default_k() -> usize {
    5
}
fn default_n_trees() -> usize {
    100
}
fn default_min_samples_split() -> usize {
    2
}
fn default_l2() -> f64 {
    1e-3
}
fn default_lr() -> f64 {
    0.1
}
fn default_max_epochs() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-5
}
fn default_true() -> bool {
    true
}

/// A classifier kind with its hyperparameters, as written in experiment
/// configs (`{"kind": "knn", "k": 3}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        standardize: bool,
    },
    NaiveBayes {
        #[serde(default)]
        standardize: bool,
    },
    RandomForest {
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default)]
        max_features: Option<usize>,
        #[serde(default = "default_min_samples_split")]
        min_samples_split: usize,
        /// Falls back to the experiment seed when absent.
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        standardize: bool,
    },
    LogisticRegression {
        #[serde(default = "default_l2")]
        l2: f64,
        #[serde(default)]
        l1: f64,
        #[serde(default = "default_lr")]
        lr: f64,
        #[serde(default = "default_max_epochs")]
        max_epochs: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_true")]
        standardize: bool,
    },
}

impl ClassifierSpec {
    pub fn knn() -> Self {
        Self::Knn {
            k: default_k(),
            standardize: false,
        }
    }

    pub fn naive_bayes() -> Self {
        Self::NaiveBayes { standardize: false }
    }

    pub fn random_forest() -> Self {
        Self::RandomForest {
            n_trees: default_n_trees(),
            max_features: None,
            min_samples_split: default_min_samples_split(),
            seed: None,
            standardize: false,
        }
    }

    pub fn logistic_regression() -> Self {
        let p = LogRegParams::default();
        Self::LogisticRegression {
            l2: p.l2,
            l1: p.l1,
            lr: p.lr,
            max_epochs: p.max_epochs,
            tol: p.tol,
            standardize: p.standardize,
        }
    }

    /// The four classifiers with default settings, in result-table order.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::knn(),
            Self::random_forest(),
            Self::naive_bayes(),
            Self::logistic_regression(),
        ]
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Knn { .. } => "knn",
            Self::NaiveBayes { .. } => "naive_bayes",
            Self::RandomForest { .. } => "random_forest",
            Self::LogisticRegression { .. } => "logistic_regression",
        }
    }

    /// Canonical `key=value` rendering of the hyperparameters.
    pub fn hyperparameters(&self) -> String {
        match self {
            Self::Knn { k, standardize } => format!("k={k};standardize={standardize}"),
            Self::NaiveBayes { standardize } => {
                format!("var_smoothing={VAR_SMOOTHING:e};standardize={standardize}")
            }
            Self::RandomForest {
                n_trees,
                max_features,
                min_samples_split,
                seed,
                standardize,
            } => format!(
                "n_trees={n_trees};max_features={};min_samples_split={min_samples_split};seed={};standardize={standardize}",
                max_features.map_or("sqrt".to_string(), |m| m.to_string()),
                seed.map_or("experiment".to_string(), |s| s.to_string()),
            ),
            Self::LogisticRegression {
                l2,
                l1,
                lr,
                max_epochs,
                tol,
                standardize,
            } => format!(
                "l2={l2:e};l1={l1:e};lr={lr};max_epochs={max_epochs};tol={tol:e};standardize={standardize}"
            ),
        }
    }

    fn input_standardization(&self) -> bool {
        match *self {
            Self::Knn { standardize, .. }
            | Self::NaiveBayes { standardize }
            | Self::RandomForest { standardize, .. } => standardize,
            // Logistic regression standardizes inside its own model.
            Self::LogisticRegression { .. } => false,
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.hyperparameters())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    GaussianNb(GaussianNbModel),
    RandomForest(RandomForestModel),
    LogReg(LogRegModel),
}

/// A fitted classifier, optionally preceded by input standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub(crate) dim: usize,
    pub(crate) n_classes: u32,
    pub(crate) standardizer: Option<Standardizer>,
    pub(crate) model: Model,
}

impl TrainedClassifier {
    /// Fits `spec` on `x`. `default_seed` seeds the forest when the spec does
    /// not name its own seed.
    pub fn fit(spec: &ClassifierSpec, x: &FeatureMatrix, default_seed: u64) -> Result<Self> {
        let standardizer = if spec.input_standardization() {
            Some(Standardizer::fit(x.view())?)
        } else {
            None
        };
        let standardized;
        let train = match &standardizer {
            Some(s) => {
                standardized = FeatureMatrix::new(
                    x.dim(),
                    x.n_classes(),
                    s.apply_f32(x.view())?,
                    x.labels().to_vec(),
                    x.extractor_id(),
                )?;
                &standardized
            }
            None => x,
        };
        let model = match *spec {
            ClassifierSpec::Knn { k, .. } => Model::Knn(knn_fit(train, k)?),
            ClassifierSpec::NaiveBayes { .. } => Model::GaussianNb(nb_fit(train)?),
            ClassifierSpec::RandomForest {
                n_trees,
                max_features,
                min_samples_split,
                seed,
                ..
            } => Model::RandomForest(rf_fit(
                train,
                &ForestParams {
                    n_trees,
                    max_features,
                    min_samples_split,
                    seed: seed.unwrap_or(default_seed),
                },
            )?),
            ClassifierSpec::LogisticRegression {
                l2,
                l1,
                lr,
                max_epochs,
                tol,
                standardize,
            } => Model::LogReg(logreg_fit(
                train,
                &LogRegParams {
                    l2,
                    l1,
                    lr,
                    max_epochs,
                    tol,
                    standardize,
                },
            )?),
        };
        Ok(Self {
            dim: x.dim(),
            n_classes: x.n_classes(),
            standardizer,
            model,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn kind(&self) -> &'static str {
        match self.model {
            Model::Knn(_) => "knn",
            Model::GaussianNb(_) => "naive_bayes",
            Model::RandomForest(_) => "random_forest",
            Model::LogReg(_) => "logistic_regression",
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn predict(&self, q: Rows<'_>) -> Result<Vec<u32>> {
        q.expect_dim(self.dim)?;
        let transformed;
        let q = match &self.standardizer {
            Some(s) => {
                transformed = s.apply_f32(q)?;
                Rows::new(&transformed, self.dim)?
            }
            None => q,
        };
        match &self.model {
            Model::Knn(m) => m.predict(q),
            Model::GaussianNb(m) => m.predict(q),
            Model::RandomForest(m) => m.predict(q),
            Model::LogReg(m) => m.predict(q),
        }
    }
}
