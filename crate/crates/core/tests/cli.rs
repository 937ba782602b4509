use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use citrusfx::synth::{write_dataset, SynthSpec};

fn citrusfx(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citrusfx"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn subcommands_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    write_dataset(cwd.join("data"), &SynthSpec::four_class(8, 3)).unwrap();

    let scan = citrusfx(&["scan", "data"], cwd);
    assert!(scan.status.success());
    assert!(stdout(&scan).contains("total\t32"));

    let split = citrusfx(&["--seed", "4", "--out", "s", "split", "data"], cwd);
    assert!(split.status.success());
    assert_eq!(fs::read_to_string(cwd.join("s/split.tsv")).unwrap().lines().count(), 32);

    let extract = citrusfx(&["--seed", "4", "--out", "f", "extract", "data"], cwd);
    assert!(extract.status.success(), "{}", String::from_utf8_lossy(&extract.stderr));
    assert!(stdout(&extract).contains("train\t24 x 576"));

    let train = citrusfx(
        &[
            "--out",
            "m",
            "train",
            "--features",
            "f/train.fcache",
            "--classifier",
            r#"{"kind":"knn","k":3}"#,
        ],
        cwd,
    );
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    assert!(cwd.join("m/model.cmdl").is_file());

    let eval = citrusfx(
        &[
            "--out",
            "m",
            "evaluate",
            "--model",
            "m/model.cmdl",
            "--features",
            "f/test.fcache",
        ],
        cwd,
    );
    assert!(eval.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&eval)).unwrap();
    assert_eq!(report["averaging"], "macro");

    let sheet = citrusfx(&["--out", "c", "contact-sheet", "data", "-n", "4"], cwd);
    assert!(sheet.status.success());
    assert_eq!(stdout(&sheet).lines().count(), 4);
}

#[test]
fn experiment_and_report_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    write_dataset(cwd.join("data"), &SynthSpec::four_class(6, 9)).unwrap();
    fs::write(
        cwd.join("grid.json"),
        r#"{"dataset_root":"data","seed":1,"extractors":["baseline"],
            "classifiers":[{"kind":"knn","k":3},{"kind":"naive_bayes"}],"output_dir":"run"}"#,
    )
    .unwrap();

    let run = citrusfx(&["--config", "grid.json", "experiment"], cwd);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = stdout(&run);
    assert!(csv.starts_with("extractor,classifier,accuracy,recall,precision,f1\n"));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(fs::read_to_string(cwd.join("run/results.csv")).unwrap(), csv);

    fs::remove_file(cwd.join("run/metrics.svg")).unwrap();
    let report = citrusfx(&["--out", "run", "report"], cwd);
    assert!(report.status.success());
    assert!(cwd.join("run/metrics.svg").is_file());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    fs::write(
        cwd.join("empty.json"),
        r#"{"dataset_root":"data","extractors":["baseline"],"classifiers":[],"output_dir":"o"}"#,
    )
    .unwrap();
    assert_eq!(
        citrusfx(&["--config", "empty.json", "experiment"], cwd).status.code(),
        Some(2)
    );
    assert_eq!(citrusfx(&["experiment"], cwd).status.code(), Some(2));
    assert_eq!(citrusfx(&["scan", "nowhere"], cwd).status.code(), Some(3));
    assert_eq!(
        citrusfx(&["train", "--features", "f.fcache", "--classifier", "svm"], cwd)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(citrusfx(&["frobnicate"], cwd).status.code(), Some(2));
}
