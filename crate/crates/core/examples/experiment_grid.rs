//! A full extractor × classifier grid driven by a JSON config.
//!
//! ```text
//! cargo run --release --example experiment_grid -- [CONFIG.json]
//! ```
//!
//! Without a config the grid runs the baseline extractor over a synthetic
//! dataset, twice, to show that the second run is served from the feature
//! cache and produces identical bytes.

use std::env;
use std::fs;

use citrusfx::runner::{run_experiment, ExperimentConfig};
use citrusfx::synth::{write_dataset, SynthSpec};

fn main() -> citrusfx::Result<()> {
    if let Some(path) = env::args().nth(1) {
        let outcome = run_experiment(&ExperimentConfig::from_file(path)?)?;
        print!("{}", fs::read_to_string(outcome.output_dir.join("results.csv"))?);
        return Ok(());
    }

    let dir = tempfile::tempdir()?;
    write_dataset(dir.path().join("data"), &SynthSpec::four_class(20, 2))?;
    let config_path = dir.path().join("grid.json");
    fs::write(
        &config_path,
        r#"{
  "dataset_root": "data",
  "seed": 7,
  "extractors": ["baseline"],
  "classifiers": [
    {"kind": "knn", "k": 5},
    {"kind": "random_forest", "n_trees": 50},
    {"kind": "naive_bayes"},
    {"kind": "logistic_regression", "l2": 0.001}
  ],
  "output_dir": "run"
}"#,
    )?;
    let config = ExperimentConfig::from_file(&config_path)?;

    let cold = run_experiment(&config)?;
    let csv = fs::read(cold.output_dir.join("results.csv"))?;
    let warm = run_experiment(&config)?;
    let again = fs::read(warm.output_dir.join("results.csv"))?;

    print!("{}", String::from_utf8_lossy(&csv));
    println!("cache hits: cold {} / warm {}", cold.cache_hits, warm.cache_hits);
    println!("results identical across runs: {}", csv == again);
    for r in &cold.records {
        println!(
            "{:<20} train {:.3}s predict {:.3}s",
            r.classifier, r.train_seconds, r.predict_seconds
        );
    }
    Ok(())
}
