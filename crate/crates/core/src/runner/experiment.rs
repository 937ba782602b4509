use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::cache::{cache_path, load_features, save_features};
use super::config::ExperimentConfig;
use super::report::{render_metric_chart, write_results_csv, write_timings_csv, Metric, ResultRecord};
use crate::classify::{save_model, TrainedClassifier};
use crate::dataset::{scan_dataset, stratified_split, DatasetIndex, SplitIndex};
use crate::error::Result;
use crate::featurex::{Extractor, FeatureMatrix};
use crate::metrics::{evaluate_predictions, EvalReport};

/// Everything a finished run produced.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub index: DatasetIndex,
    pub split: SplitIndex,
    /// In grid order: extractors as configured, classifiers within each.
    pub records: Vec<ResultRecord>,
    pub reports: Vec<EvalReport>,
    /// Feature matrices served from the cache rather than extracted.
    pub cache_hits: usize,
    pub output_dir: PathBuf,
}

/// Train and test features for one extractor on one split.
pub struct SplitFeatures {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub cache_hits: usize,
}

fn side_inputs(index: &DatasetIndex, positions: &[usize]) -> (Vec<PathBuf>, Vec<u32>) {
    positions
        .iter()
        .map(|&i| {
            let e = &index.entries()[i];
            (index.absolute_path(e), e.class_id)
        })
        .unzip()
}

/// Extracts (or loads from `cache_dir`) the features of both sides of
/// `split`. A cache file is used only if its extractor id and labels match.
pub fn split_features(
    extractor: &Extractor,
    index: &DatasetIndex,
    split: &SplitIndex,
    cache_dir: Option<&Path>,
) -> Result<SplitFeatures> {
    let signature = split.signature(index);
    let k = index.n_classes() as u32;
    let mut hits = 0;
    let mut side = |name: &str, positions: &[usize]| -> Result<FeatureMatrix> {
        let (paths, labels) = side_inputs(index, positions);
        let cached = cache_dir.map(|dir| cache_path(dir, extractor.id(), &signature, name));
        if let Some(path) = cached.as_deref().filter(|p| p.is_file()) {
            // A damaged or mismatched file is treated as a miss and rewritten.
            if let Ok(fm) = load_features(path) {
                if fm.extractor_id() == extractor.id()
                    && fm.labels() == labels.as_slice()
                    && fm.dim() == extractor.dim()
                    && fm.n_classes() == k
                {
                    hits += 1;
                    return Ok(fm);
                }
            }
        }
        let fm = extractor.extract_files(&paths, &labels, k)?;
        if let Some(path) = cached {
            save_features(path, &fm)?;
        }
        Ok(fm)
    };
    let train = side("train", &split.train)?;
    let test = side("test", &split.test)?;
    Ok(SplitFeatures {
        train,
        test,
        cache_hits: hits,
    })
}

fn file_stem_for(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Runs the whole grid: one split shared by every cell, features per
/// extractor, then every classifier on those features.
///
/// Writes `split.tsv`, `results.csv`, `timings.csv`, `metrics.svg` and one
/// `reports/<extractor>__<classifier>.json` per cell into the output
/// directory. Any failing cell aborts the run with the cell named in the
/// error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let index = scan_dataset(&config.dataset_root)?;
    let split = stratified_split(&index, config.test_fraction, config.seed)?;
    let specs = config.extractor_specs()?;
    let labels = config.classifier_labels();

    let out = &config.output_dir;
    let cache_dir = config.cache_dir();
    fs::create_dir_all(out.join("reports"))?;
    fs::create_dir_all(&cache_dir)?;
    if config.save_models {
        fs::create_dir_all(out.join("models"))?;
    }
    split.write_manifest(&index, out.join("split.tsv"))?;

    let mut records = Vec::new();
    let mut reports = Vec::new();
    let mut cache_hits = 0;
    for (extractor_label, spec) in &specs {
        let features = Extractor::with_batch_size(spec, config.batch_size)
            .and_then(|ex| {
                let f = split_features(&ex, &index, &split, Some(&cache_dir))?;
                Ok((ex.id().to_string(), f))
            })
            .map_err(|e| e.in_cell(format!("extractor {extractor_label}")))?;
        let (extractor_id, features) = features;
        cache_hits += features.cache_hits;

        let cells: Vec<(ResultRecord, EvalReport)> = config
            .classifiers
            .par_iter()
            .zip(labels.par_iter())
            .map(|(clf, clf_label)| {
                let cell = format!("{extractor_label} × {clf_label}");
                let run = || -> Result<(ResultRecord, EvalReport)> {
                    let t0 = Instant::now();
                    let model = TrainedClassifier::fit(clf, &features.train, config.seed)?;
                    let train_seconds = t0.elapsed().as_secs_f64();
                    let t1 = Instant::now();
                    let predicted = model.predict(features.test.view())?;
                    let predict_seconds = t1.elapsed().as_secs_f64();
                    let report = evaluate_predictions(features.test.labels(), &predicted, index.class_names())?;
                    let stem = format!("{}__{}", file_stem_for(extractor_label), file_stem_for(clf_label));
                    fs::write(out.join("reports").join(format!("{stem}.json")), report.to_json())?;
                    if config.save_models {
                        save_model(out.join("models").join(format!("{stem}.cmdl")), &model)?;
                    }
                    let record = ResultRecord {
                        extractor: extractor_label.clone(),
                        extractor_id: extractor_id.clone(),
                        classifier: clf_label.clone(),
                        hyperparameters: clf.hyperparameters(),
                        accuracy: report.accuracy,
                        recall: report.macro_recall,
                        precision: report.macro_precision,
                        f1: report.macro_f1,
                        train_seconds,
                        predict_seconds,
                    };
                    Ok((record, report))
                };
                run().map_err(|e| e.in_cell(cell))
            })
            .collect::<Result<_>>()?;
        for (record, report) in cells {
            records.push(record);
            reports.push(report);
        }
    }

    write_results_csv(&records, out.join("results.csv"))?;
    write_timings_csv(&records, out.join("timings.csv"))?;
    let title = config
        .dataset_root
        .file_name()
        .map(|n| format!("Evaluation metrics ({})", n.to_string_lossy()))
        .unwrap_or_else(|| "Evaluation metrics".to_string());
    render_metric_chart(&records, &Metric::ALL, &title, out.join("metrics.svg"))?;

    Ok(ExperimentOutcome {
        index,
        split,
        records,
        reports,
        cache_hits,
        output_dir: out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ClassifierSpec;
    use crate::synth::{write_dataset, SynthSpec};

    #[test]
    fn baseline_grid_runs_and_fails_loudly() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path().join("data"), &SynthSpec::four_class(10, 5)).unwrap();
        let mut config = ExperimentConfig::new(
            dir.path().join("data"),
            dir.path().join("out"),
            vec!["baseline".into()],
            ClassifierSpec::defaults(),
        );
        config.seed = 3;
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.records.len(), 4);
        assert_eq!(outcome.split.test.len(), 8);
        for r in &outcome.records {
            for m in [r.accuracy, r.recall, r.precision, r.f1] {
                assert!((0.0..=1.0).contains(&m));
            }
        }
        assert!(dir.path().join("out/reports/baseline__knn.json").is_file());

        // A k larger than the training set must name the failing cell.
        config.classifiers = vec![ClassifierSpec::Knn {
            k: 1000,
            standardize: false,
        }];
        let err = run_experiment(&config).unwrap_err();
        assert!(err.to_string().contains("baseline × knn"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
}
