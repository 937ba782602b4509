//! Citrus disease classification from pretrained-CNN features.
//!
//! Images are scanned from a class-per-folder tree, split with a seeded
//! stratified draw, turned into feature vectors by a frozen ONNX network (or
//! a colour-statistics baseline), and classified with k-nearest neighbours,
//! Gaussian naive Bayes, a random forest or softmax regression. Results are
//! scored with macro-averaged precision, recall and F1.
//!
//! ```no_run
//! use citrusfx::{classify::ClassifierSpec, runner::{run_experiment, ExperimentConfig}};
//!
//! let config = ExperimentConfig::new("data/orange", "runs/orange", vec!["baseline".into()], ClassifierSpec::defaults());
//! for r in run_experiment(&config)?.records {
//!     println!("{} {} {:.4}", r.extractor, r.classifier, r.accuracy);
//! }
//! # Ok::<(), citrusfx::Error>(())
//! ```

pub mod classify;
mod codec;
pub mod dataset;
pub mod error;
pub mod featurex;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod synth;

pub use error::{Error, Result};
