//! Result tables and metric charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 6] = ["extractor", "classifier", "accuracy", "recall", "precision", "f1"];

/// One grid cell's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub extractor: String,
    pub extractor_id: String,
    pub classifier: String,
    pub hyperparameters: String,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    Recall,
    Precision,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Recall, Metric::Precision, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Recall => "recall",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
        }
    }

    fn colour(self) -> &'static str {
        match self {
            Metric::Accuracy => "#4c72b0",
            Metric::Recall => "#dd8452",
            Metric::Precision => "#55a868",
            Metric::F1 => "#c44e52",
        }
    }

    pub fn of(self, r: &ResultRecord) -> f64 {
        match self {
            Metric::Accuracy => r.accuracy,
            Metric::Recall => r.recall,
            Metric::Precision => r.precision,
            Metric::F1 => r.f1,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    extractor: String,
    classifier: String,
    accuracy: String,
    recall: String,
    precision: String,
    f1: String,
}

fn non_empty(records: &[ResultRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::DegenerateInput("no result records".into()))
    } else {
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Results table text with metrics at four decimals.
pub fn results_csv(records: &[ResultRecord]) -> Result<String> {
    non_empty(records)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            extractor: r.extractor.clone(),
            classifier: r.classifier.clone(),
            accuracy: format!("{:.4}", r.accuracy),
            recall: format!("{:.4}", r.recall),
            precision: format!("{:.4}", r.precision),
            f1: format!("{:.4}", r.f1),
        })
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_results_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, results_csv(records)?)?;
    Ok(())
}

/// Wall-clock timings, kept apart from the metrics table because they vary
/// between runs.
pub fn write_timings_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    non_empty(records)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "extractor",
        "extractor_id",
        "classifier",
        "hyperparameters",
        "train_seconds",
        "predict_seconds",
    ])
    .map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.extractor.as_str(),
            r.extractor_id.as_str(),
            r.classifier.as_str(),
            r.hyperparameters.as_str(),
            &format!("{:.6}", r.train_seconds),
            &format!("{:.6}", r.predict_seconds),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results table back. Fields not stored in the table are left
/// empty or zero.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::PathNotFound(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Format(format!("unexpected results header {header:?}")));
    }
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Format(format!("bad metric value `{s}`")))?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::Format(format!("metric {v} outside [0, 1]")))
        }
    };
    let mut records = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(csv_error)?;
        records.push(ResultRecord {
            extractor: row.extractor,
            extractor_id: String::new(),
            classifier: row.classifier,
            hyperparameters: String::new(),
            accuracy: parse(&row.accuracy)?,
            recall: parse(&row.recall)?,
            precision: parse(&row.precision)?,
            f1: parse(&row.f1)?,
            train_seconds: 0.0,
            predict_seconds: 0.0,
        });
    }
    non_empty(&records)?;
    Ok(records)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PANEL_HEIGHT: f64 = 260.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_HEIGHT: f64 = 180.0;
const LEFT: f64 = 60.0;
const BAR_WIDTH: f64 = 16.0;
const GROUP_GAP: f64 = 28.0;

/// Grouped bar chart as SVG text: one panel per extractor, one group per
/// classifier, one bar per metric, y axis fixed to [0, 1].
pub fn metric_chart_svg(records: &[ResultRecord], metrics: &[Metric], title: &str) -> Result<String> {
    non_empty(records)?;
    if metrics.is_empty() {
        return Err(Error::DegenerateInput("no metrics to draw".into()));
    }
    let mut panels: Vec<(&str, Vec<&ResultRecord>)> = Vec::new();
    for r in records {
        match panels.iter_mut().find(|(e, _)| *e == r.extractor) {
            Some((_, rows)) => rows.push(r),
            None => panels.push((&r.extractor, vec![r])),
        }
    }
    let widest = panels.iter().map(|(_, rows)| rows.len()).max().unwrap_or(1);
    let group_width = BAR_WIDTH * metrics.len() as f64 + GROUP_GAP;
    let width = LEFT + group_width * widest as f64 + 150.0;
    let height = 30.0 + PANEL_HEIGHT * panels.len() as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );

    for (p, (extractor, rows)) in panels.iter().enumerate() {
        let top = 30.0 + PANEL_HEIGHT * p as f64 + PLOT_TOP;
        let bottom = top + PLOT_HEIGHT;
        let right = LEFT + group_width * rows.len() as f64;
        let _ = writeln!(
            s,
            r#"<text x="{LEFT:.1}" y="{:.1}" font-size="12" font-weight="bold">{}</text>"#,
            top - 12.0,
            escape(extractor)
        );
        for tick in 0..=5 {
            let v = tick as f64 / 5.0;
            let y = bottom - v * PLOT_HEIGHT;
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{right:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.1}" y1="{top:.1}" x2="{LEFT:.1}" y2="{bottom:.1}" stroke="black"/><line x1="{LEFT:.1}" y1="{bottom:.1}" x2="{right:.1}" y2="{bottom:.1}" stroke="black"/>"#
        );
        for (g, r) in rows.iter().enumerate() {
            let x0 = LEFT + GROUP_GAP / 2.0 + group_width * g as f64;
            for (m, metric) in metrics.iter().enumerate() {
                let v = metric.of(r).clamp(0.0, 1.0);
                let h = v * PLOT_HEIGHT;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="{BAR_WIDTH:.1}" height="{h:.1}" fill="{}"><title>{} {}: {v:.4}</title></rect>"#,
                    x0 + BAR_WIDTH * m as f64,
                    bottom - h,
                    metric.colour(),
                    escape(&r.classifier),
                    metric.name(),
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x0 + BAR_WIDTH * metrics.len() as f64 / 2.0,
                bottom + 16.0,
                escape(&r.classifier)
            );
        }
        for (m, metric) in metrics.iter().enumerate() {
            let y = top + 16.0 * m as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                right + 20.0,
                y,
                metric.colour(),
                right + 36.0,
                y + 9.0,
                metric.name()
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_metric_chart(
    records: &[ResultRecord],
    metrics: &[Metric],
    title: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, metric_chart_svg(records, metrics, title)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(extractor: &str, classifier: &str, accuracy: f64) -> ResultRecord {
        ResultRecord {
            extractor: extractor.into(),
            extractor_id: format!("{extractor}:id"),
            classifier: classifier.into(),
            hyperparameters: "k=5".into(),
            accuracy,
            recall: 0.5,
            precision: 0.25,
            f1: 1.0 / 3.0,
            train_seconds: 0.1,
            predict_seconds: 0.2,
        }
    }

    fn grid() -> Vec<ResultRecord> {
        let mut out = Vec::new();
        for e in ["vgg16", "vgg19", "resnet50"] {
            for c in ["knn", "random_forest", "naive_bayes", "logistic_regression"] {
                out.push(record(e, c, 0.9));
            }
        }
        out
    }

    #[test]
    fn csv_formatting() {
        let text = results_csv(&[record("baseline", "knn", 0.975)]).unwrap();
        assert_eq!(
            text,
            "extractor,classifier,accuracy,recall,precision,f1\nbaseline,knn,0.9750,0.5000,0.2500,0.3333\n"
        );
        assert_eq!(results_csv(&grid()).unwrap().lines().count(), 13);
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(results_csv(&[]), Err(Error::DegenerateInput(_))));
        assert!(matches!(
            metric_chart_svg(&[], &Metric::ALL, "t"),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn csv_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&grid(), &path).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), 12);
        assert_eq!(back[5].extractor, "vgg19");
        assert_eq!(back[5].classifier, "random_forest");
        assert_eq!(back[5].f1, 0.3333);
    }

    #[test]
    fn chart_is_deterministic_and_well_formed() {
        let a = metric_chart_svg(&grid(), &Metric::ALL, "Orange").unwrap();
        let b = metric_chart_svg(&grid(), &Metric::ALL, "Orange").unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        // 12 cells × 4 metrics, plus the background and 3 × 4 legend swatches.
        assert_eq!(a.matches("<rect").count(), 48 + 1 + 12);
    }

    #[test]
    fn bar_height_tracks_value() {
        let svg = metric_chart_svg(&[record("b", "knn", 1.0)], &[Metric::Accuracy], "t").unwrap();
        assert!(svg.contains(&format!(r##"height="{PLOT_HEIGHT:.1}" fill="#4c72b0""##)));
    }
}
