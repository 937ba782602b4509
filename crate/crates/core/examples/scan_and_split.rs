//! Scan a class-per-folder image tree and split it into train and test sets.
//!
//! ```text
//! cargo run --example scan_and_split -- [DATASET_ROOT] [SEED]
//! ```
//!
//! Without a root a small synthetic dataset is generated first.

use std::env;

use citrusfx::dataset::{scan_dataset, stratified_split, DatasetEntry, DatasetIndex};
use citrusfx::synth::{write_dataset, SynthSpec};

fn main() -> citrusfx::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let tmp = tempfile::tempdir()?;
    let index = match args.first() {
        Some(root) => scan_dataset(root)?,
        None => write_dataset(tmp.path(), &SynthSpec::four_class(25, 7))?,
    };

    println!("{} images in {} classes", index.len(), index.n_classes());
    let split = stratified_split(&index, 0.2, seed)?;
    let test_counts = split.test_counts(&index);
    for (c, name) in index.class_names().iter().enumerate() {
        println!(
            "  {name:<12} {:>5} total {:>4} test",
            index.class_counts()[c],
            test_counts[c]
        );
    }
    println!("train {} / test {}", split.train.len(), split.test.len());
    println!("split signature {}", &split.signature(&index)[..16]);

    // The orange set's class sizes, split without touching any files.
    let sizes = [344, 349, 552, 369];
    let names = ["blackspot", "canker", "fresh", "greening"].map(String::from).to_vec();
    let entries = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| {
            (0..n).map(move |i| DatasetEntry {
                class_id: c as u32,
                path: format!("{}/{i:04}.jpg", ["blackspot", "canker", "fresh", "greening"][c]),
            })
        })
        .collect();
    let orange = DatasetIndex::from_parts("orange", names, entries)?;
    let split = stratified_split(&orange, 0.2, seed)?;
    println!(
        "orange-sized split: train {} / test {} (per class {:?})",
        split.train.len(),
        split.test.len(),
        split.test_counts(&orange)
    );
    Ok(())
}
