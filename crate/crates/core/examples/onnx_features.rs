//! Features from an ONNX network cut at an inner tensor.
//!
//! ```text
//! cargo run --release --example onnx_features -- [MANIFEST.json IMAGE ...]
//! ```
//!
//! A manifest names the graph's input and tapped tensor, the preprocessing
//! convention and the expected feature size, for example
//!
//! ```json
//! {"kind": "resnet50", "input_name": "input", "output_name": "layer4_out",
//!  "preprocessing": "unit_scale_torch", "channel_order_expected": "rgb",
//!  "tap": "flatten_last_conv", "output_dim": 100352}
//! ```
//!
//! With no arguments a tiny generated network stands in for a pretrained one.

#[path = "support/probe_model.rs"]
mod probe_model;

use std::env;
use std::path::PathBuf;

use citrusfx::dataset::ImageTensor;
use citrusfx::featurex::{Extractor, ExtractorSpec};

fn main() -> citrusfx::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let tmp = tempfile::tempdir()?;
    let (manifest, images) = match args.split_first() {
        Some((m, rest)) => (PathBuf::from(m), rest.iter().map(PathBuf::from).collect::<Vec<_>>()),
        None => (
            probe_model::write_probe_model(tmp.path(), "probe", "flatten_last_conv")?,
            Vec::new(),
        ),
    };

    let spec = ExtractorSpec::from_manifest(&manifest)?;
    let extractor = Extractor::with_batch_size(&spec, 4)?;
    println!("loaded {}", extractor.id());

    let fm = if images.is_empty() {
        let tiles: Vec<ImageTensor> = (0..6)
            .map(|i| ImageTensor::solid(224, 224, [0.1 * i as f32, 0.5, 1.0 - 0.15 * i as f32]))
            .collect();
        extractor.extract(&tiles, &[0; 6], 1)?
    } else {
        let labels = vec![0; images.len()];
        extractor.extract_files(&images, &labels, 1)?
    };
    println!("{} rows of {} features", fm.rows(), fm.dim());
    for i in 0..fm.rows() {
        let row = fm.row(i);
        let active = row.iter().filter(|&&v| v > 0.0).count();
        println!("  row {i}: {active} active, first values {:?}", &row[..4]);
    }
    Ok(())
}
