//! A captioned grid of randomly chosen training images.
//!
//! ```text
//! cargo run --example contact_sheet -- [DATASET_ROOT] [N] [OUT.svg]
//! ```

use std::env;
use std::path::PathBuf;

use citrusfx::dataset::{scan_dataset, stratified_split};
use citrusfx::runner::export_contact_sheet;
use citrusfx::synth::{write_dataset, SynthSpec};

fn main() -> citrusfx::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let index = match args.first() {
        Some(root) => scan_dataset(root)?,
        None => write_dataset(tmp.path().join("data"), &SynthSpec::four_class(6, 1))?,
    };
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(9);
    let out = args
        .get(2)
        .map(PathBuf::from)
        .unwrap_or_else(|| env::temp_dir().join("citrusfx_contact_sheet.svg"));

    let split = stratified_split(&index, 0.2, 42)?;
    let chosen = export_contact_sheet(&index, &split, n, 42, &out)?;
    for i in chosen {
        let e = &index.entries()[i];
        println!("{:<10} {}", index.class_names()[e.class_id as usize], e.path);
    }
    println!("wrote {}", out.display());
    Ok(())
}
