//! Experiment orchestration: config files, feature caching, result tables,
//! charts and contact sheets.

mod cache;
mod config;
mod contact_sheet;
mod experiment;
mod report;

pub use cache::{
    cache_file_size, cache_path, decode_features, encode_features, load_features, save_features, CACHE_MAGIC,
};
pub use config::ExperimentConfig;
pub use contact_sheet::{contact_sheet_selection, export_contact_sheet, TILE_SIDE};
pub use experiment::{run_experiment, split_features, ExperimentOutcome, SplitFeatures};
pub use report::{
    metric_chart_svg, read_results_csv, render_metric_chart, results_csv, write_results_csv, write_timings_csv, Metric,
    ResultRecord, RESULTS_HEADER,
};
