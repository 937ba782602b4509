//! Macro metrics from the lemon and orange test-set confusion matrices.
//!
//! ```text
//! cargo run --example confusion_metrics
//! ```

use citrusfx::metrics::{evaluate, ConfusionMatrix};

fn show(title: &str, names: &[&str], rows: &[Vec<u64>]) -> citrusfx::Result<()> {
    let cm = ConfusionMatrix::from_counts(rows)?.with_class_names(names.iter().map(|s| s.to_string()).collect())?;
    let r = evaluate(&cm)?;
    println!("{title} ({} test images)", cm.total());
    for (name, s) in names.iter().zip(&r.per_class) {
        println!(
            "  {name:<10} precision {:.4} recall {:.4} f1 {:.4}",
            s.precision, s.recall, s.f1
        );
    }
    println!(
        "  accuracy {:.6}  macro recall {:.6}  macro precision {:.6}  macro F1 {:.6}\n",
        r.accuracy, r.macro_recall, r.macro_precision, r.macro_f1
    );
    Ok(())
}

fn main() -> citrusfx::Result<()> {
    show(
        "Lemon",
        &["healthy", "canker", "mold", "scab"],
        &[vec![6, 0, 0, 0], vec![0, 14, 0, 1], vec![0, 0, 9, 0], vec![0, 0, 0, 10]],
    )?;
    show(
        "Orange",
        &["blackspot", "canker", "fresh", "greening"],
        &[
            vec![70, 2, 0, 0],
            vec![0, 78, 0, 0],
            vec![0, 0, 102, 0],
            vec![0, 0, 0, 71],
        ],
    )?;
    let json = evaluate(&ConfusionMatrix::from_counts(&[vec![6, 0], vec![1, 9]])?)?.to_json();
    println!("report export:\n{json}");
    Ok(())
}
