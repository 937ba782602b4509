use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use citrusfx::classify::{load_model, save_model, ClassifierSpec, TrainedClassifier};
use citrusfx::dataset::{scan_dataset, stratified_split};
use citrusfx::featurex::{Extractor, ExtractorSpec};
use citrusfx::metrics::evaluate_predictions;
use citrusfx::runner::{
    export_contact_sheet, load_features, read_results_csv, render_metric_chart, results_csv, run_experiment,
    save_features, split_features, ExperimentConfig, Metric,
};
use citrusfx::{Error, Result};

#[derive(Parser)]
#[command(
    name = "citrusfx",
    version,
    about = "Citrus disease classification from CNN features"
)]
struct Cli {
    /// Seed for the split, forests and contact sheets (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List classes and image counts of a dataset.
    Scan { root: Option<PathBuf> },
    /// Write the train/test manifest `split.tsv`.
    Split {
        root: Option<PathBuf>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Extract train and test features into `train.fcache` and `test.fcache`.
    Extract {
        root: Option<PathBuf>,
        /// `baseline` or the path of a model manifest.
        #[arg(long, default_value = "baseline")]
        extractor: String,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
    },
    /// Fit a classifier on a feature cache and write `model.cmdl`.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Classifier kind (`knn`, `naive_bayes`, `random_forest`,
        /// `logistic_regression`) or a JSON object such as `{"kind":"knn","k":3}`.
        #[arg(long, default_value = "logistic_regression")]
        classifier: String,
    },
    /// Score a saved model on a feature cache and write `report.json`.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Run the extractor × classifier grid from `--config`.
    Experiment,
    /// Draw `metrics.svg` from a results table.
    Report {
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long, default_value = "Evaluation metrics")]
        title: String,
    },
    /// Write a captioned grid of random training images.
    ContactSheet {
        root: Option<PathBuf>,
        #[arg(short, long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
}

struct Context {
    config: Option<ExperimentConfig>,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut config = cli.config.as_deref().map(ExperimentConfig::from_file).transpose()?;
        if let (Some(c), Some(seed)) = (config.as_mut(), cli.seed) {
            c.seed = seed;
        }
        if let (Some(c), Some(out)) = (config.as_mut(), cli.out.as_ref()) {
            c.output_dir = out.clone();
        }
        let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
        let out = cli
            .out
            .clone()
            .or(config.as_ref().map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, seed, out })
    }

    fn root(&self, arg: Option<PathBuf>) -> Result<PathBuf> {
        arg.or(self.config.as_ref().map(|c| c.dataset_root.clone()))
            .ok_or_else(|| Error::Config("a dataset root is required (argument or --config)".into()))
    }

    fn test_fraction(&self, arg: Option<f64>) -> f64 {
        arg.or(self.config.as_ref().map(|c| c.test_fraction)).unwrap_or(0.2)
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn parse_classifier(text: &str) -> Result<ClassifierSpec> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        serde_json::json!({ "kind": text }).to_string()
    };
    serde_json::from_str(&json).map_err(|e| Error::Config(format!("classifier `{text}`: {e}")))
}

fn extractor_spec(name: &str) -> Result<ExtractorSpec> {
    if name == "baseline" {
        Ok(ExtractorSpec::baseline())
    } else {
        ExtractorSpec::from_manifest(Path::new(name))
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Context::new(&cli)?;
    match cli.command {
        Command::Scan { root } => {
            let index = scan_dataset(ctx.root(root)?)?;
            for (name, count) in index.class_names().iter().zip(index.class_counts()) {
                println!("{name}\t{count}");
            }
            println!("total\t{}", index.len());
        }
        Command::Split { root, test_fraction } => {
            let index = scan_dataset(ctx.root(root)?)?;
            let split = stratified_split(&index, ctx.test_fraction(test_fraction), ctx.seed)?;
            let path = ctx.out_file("split.tsv")?;
            split.write_manifest(&index, &path)?;
            println!("train\t{}\ntest\t{}", split.train.len(), split.test.len());
            println!("signature\t{}", split.signature(&index));
            eprintln!("wrote {}", path.display());
        }
        Command::Extract {
            root,
            extractor,
            test_fraction,
            batch_size,
        } => {
            let index = scan_dataset(ctx.root(root)?)?;
            let split = stratified_split(&index, ctx.test_fraction(test_fraction), ctx.seed)?;
            let ex = Extractor::with_batch_size(&extractor_spec(&extractor)?, batch_size)?;
            let features = split_features(&ex, &index, &split, None)?;
            split.write_manifest(&index, ctx.out_file("split.tsv")?)?;
            save_features(ctx.out_file("train.fcache")?, &features.train)?;
            save_features(ctx.out_file("test.fcache")?, &features.test)?;
            println!("extractor\t{}", ex.id());
            println!("train\t{} x {}", features.train.rows(), features.train.dim());
            println!("test\t{} x {}", features.test.rows(), features.test.dim());
        }
        Command::Train { features, classifier } => {
            let spec = parse_classifier(&classifier)?;
            let train = load_features(&features)?;
            let model = TrainedClassifier::fit(&spec, &train, ctx.seed)?;
            let path = ctx.out_file("model.cmdl")?;
            save_model(&path, &model)?;
            println!("{spec}");
            eprintln!("wrote {}", path.display());
        }
        Command::Evaluate { model, features } => {
            let model = load_model(&model)?;
            let test = load_features(&features)?;
            let predicted = model.predict(test.view())?;
            let names: Vec<String> = match &ctx.config {
                Some(c) => scan_dataset(&c.dataset_root)?.class_names().to_vec(),
                None => (0..test.n_classes()).map(|c| format!("class_{c}")).collect(),
            };
            let report = evaluate_predictions(test.labels(), &predicted, &names)?;
            let json = report.to_json();
            fs::write(ctx.out_file("report.json")?, &json)?;
            print!("{json}");
        }
        Command::Experiment => {
            let config = ctx
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("`experiment` needs --config".into()))?;
            let outcome = run_experiment(config)?;
            print!("{}", results_csv(&outcome.records)?);
            eprintln!("wrote results to {}", outcome.output_dir.display());
        }
        Command::Report { results, title } => {
            let results = results.unwrap_or_else(|| ctx.out.join("results.csv"));
            let records = read_results_csv(&results)?;
            let path = ctx.out_file("metrics.svg")?;
            render_metric_chart(&records, &Metric::ALL, &title, &path)?;
            eprintln!("wrote {}", path.display());
        }
        Command::ContactSheet { root, n, test_fraction } => {
            let index = scan_dataset(ctx.root(root)?)?;
            let split = stratified_split(&index, ctx.test_fraction(test_fraction), ctx.seed)?;
            let path = ctx.out_file("contact_sheet.svg")?;
            let chosen = export_contact_sheet(&index, &split, n, ctx.seed, &path)?;
            for i in chosen {
                let e = &index.entries()[i];
                println!("{}\t{}", index.class_names()[e.class_id as usize], e.path);
            }
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
