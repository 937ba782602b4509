//! The four classifiers side by side on baseline features of a synthetic
//! dataset.
//!
//! ```text
//! cargo run --release --example classifiers
//! ```

use citrusfx::classify::{ClassifierSpec, TrainedClassifier};
use citrusfx::dataset::stratified_split;
use citrusfx::featurex::{Extractor, ExtractorSpec};
use citrusfx::metrics::evaluate_predictions;
use citrusfx::runner::split_features;
use citrusfx::synth::{write_dataset, SynthSpec};

fn main() -> citrusfx::Result<()> {
    let dir = tempfile::tempdir()?;
    let index = write_dataset(dir.path(), &SynthSpec::four_class(30, 11))?;
    let split = stratified_split(&index, 0.2, 5)?;
    let extractor = Extractor::load(&ExtractorSpec::baseline())?;
    let features = split_features(&extractor, &index, &split, None)?;
    println!(
        "train {} x {}, test {}",
        features.train.rows(),
        features.train.dim(),
        features.test.rows()
    );

    let mut specs = ClassifierSpec::defaults();
    specs.push(ClassifierSpec::Knn {
        k: 3,
        standardize: true,
    });
    for spec in &specs {
        let model = TrainedClassifier::fit(spec, &features.train, 5)?;
        let predicted = model.predict(features.test.view())?;
        let report = evaluate_predictions(features.test.labels(), &predicted, index.class_names())?;
        println!(
            "{:<70} accuracy {:.4}  macro F1 {:.4}",
            spec.to_string(),
            report.accuracy,
            report.macro_f1
        );
    }
    Ok(())
}
