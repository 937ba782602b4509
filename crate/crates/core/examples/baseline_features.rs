//! Colour-histogram and thumbnail features, no network weights needed.
//!
//! ```text
//! cargo run --example baseline_features -- [IMAGE ...]
//! ```

use std::env;
use std::path::PathBuf;

use citrusfx::dataset::{load_image, ImageTensor};
use citrusfx::featurex::{baseline_extract, Extractor, ExtractorSpec};
use citrusfx::synth::{render_image, SynthSpec};

fn summarize(name: &str, features: &[f64]) {
    let (hist, thumb) = features.split_at(512);
    let top = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    let (r, g, b) = (top.0 / 64, top.0 / 8 % 8, top.0 % 8);
    let brightness = thumb.iter().sum::<f64>() / thumb.len() as f64;
    println!(
        "{name}: dominant colour bin ({r},{g},{b}) holds {:.1}% of pixels, mean brightness {brightness:.3}",
        top.1 * 100.0
    );
}

fn main() -> citrusfx::Result<()> {
    let paths: Vec<PathBuf> = env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        let spec = SynthSpec::four_class(1, 3);
        for (c, name) in spec.class_names.iter().enumerate() {
            let img = render_image(&spec, c, 0);
            let pixels = img.as_raw().iter().map(|&v| f32::from(v) / 255.0).collect();
            let tensor = ImageTensor::new(img.height() as usize, img.width() as usize, pixels)?;
            summarize(name, &baseline_extract(&tensor));
        }
        return Ok(());
    }

    for path in &paths {
        summarize(&path.display().to_string(), &baseline_extract(&load_image(path)?));
    }
    let extractor = Extractor::load(&ExtractorSpec::baseline())?;
    let labels = vec![0; paths.len()];
    let fm = extractor.extract_files(&paths, &labels, 1)?;
    println!(
        "feature matrix {} x {} from `{}`",
        fm.rows(),
        fm.dim(),
        fm.extractor_id()
    );
    Ok(())
}
