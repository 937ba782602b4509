//! Saving feature caches and trained models, and loading them back.
//!
//! ```text
//! cargo run --example persistence
//! ```

use std::fs;

use citrusfx::classify::{load_model, save_model, ClassifierSpec, TrainedClassifier};
use citrusfx::featurex::FeatureMatrix;
use citrusfx::rng::SeededRng;
use citrusfx::runner::{load_features, save_features};

fn main() -> citrusfx::Result<()> {
    let dir = tempfile::tempdir()?;
    let mut rng = SeededRng::new(3);
    let labels: Vec<u32> = (0..60).map(|i| i % 3).collect();
    let values: Vec<f32> = labels
        .iter()
        .flat_map(|&l| {
            (0..8)
                .map(|d| (l as usize * 2 + d % 2) as f32 + 0.3 * rng.normal() as f32)
                .collect::<Vec<_>>()
        })
        .collect();
    let fm = FeatureMatrix::new(8, 3, values, labels, "demo:v1")?;

    let cache = dir.path().join("train.fcache");
    save_features(&cache, &fm)?;
    let back = load_features(&cache)?;
    println!(
        "feature cache: {} bytes, identical after reload: {}",
        fs::metadata(&cache)?.len(),
        back == fm
    );

    for spec in ClassifierSpec::defaults() {
        let model = TrainedClassifier::fit(&spec, &fm, 1)?;
        let path = dir.path().join(format!("{}.cmdl", spec.kind()));
        save_model(&path, &model)?;
        let loaded = load_model(&path)?;
        let same = loaded.predict(fm.view())? == model.predict(fm.view())?;
        println!(
            "{:<20} {:>7} bytes, identical model: {}, identical predictions: {same}",
            spec.kind(),
            fs::metadata(&path)?.len(),
            loaded == model
        );
    }

    fs::write(dir.path().join("broken.cmdl"), b"NOTAMODEL")?;
    match load_model(dir.path().join("broken.cmdl")) {
        Err(e) => println!("corrupt file rejected: {e}"),
        Ok(_) => println!("corrupt file unexpectedly loaded"),
    }
    Ok(())
}
