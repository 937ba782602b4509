use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierSpec;
use crate::error::{Error, Result};
use crate::featurex::ExtractorSpec;

fn default_test_fraction() -> f64 {
    0.2
}
fn default_batch_size() -> usize {
    8
}

/// An experiment grid as written in a JSON config file.
///
/// ```json
/// {
///   "dataset_root": "data/orange",
///   "seed": 42,
///   "extractors": ["baseline", "models/resnet50.json"],
///   "classifiers": [{"kind": "knn", "k": 5}, {"kind": "logistic_regression"}],
///   "output_dir": "runs/orange"
/// }
/// ```
///
/// Relative paths are resolved against the directory holding the config.
/// Extractors are either `"baseline"` or the path of a model manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_root: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    pub extractors: Vec<String>,
    pub classifiers: Vec<ClassifierSpec>,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Also write every fitted model under `<output_dir>/models`.
    #[serde(default)]
    pub save_models: bool,
}

impl ExperimentConfig {
    /// A config with default settings for everything but the essentials.
    pub fn new(
        dataset_root: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        extractors: Vec<String>,
        classifiers: Vec<ClassifierSpec>,
    ) -> Self {
        Self {
            dataset_root: dataset_root.into(),
            test_fraction: default_test_fraction(),
            seed: 0,
            extractors,
            classifiers,
            output_dir: output_dir.into(),
            cache_dir: None,
            batch_size: default_batch_size(),
            save_models: false,
        }
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config {} not found", path.display())),
            _ => Error::Io(e),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        self.dataset_root = join(&self.dataset_root);
        self.output_dir = join(&self.output_dir);
        self.cache_dir = self.cache_dir.as_deref().map(join);
        for e in &mut self.extractors {
            if e != "baseline" {
                *e = join(Path::new(e.as_str())).to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.extractors.is_empty() {
            return Err(Error::Config("at least one extractor is required".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("at least one classifier is required".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.extractors {
            if !seen.insert(e) {
                return Err(Error::Config(format!("extractor `{e}` is listed twice")));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &self.classifiers {
            if !seen.insert(c.to_string()) {
                return Err(Error::Config(format!("classifier `{c}` is listed twice")));
            }
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    /// Loads the extractor specs named in the config.
    pub fn extractor_specs(&self) -> Result<Vec<(String, ExtractorSpec)>> {
        self.extractors
            .iter()
            .map(|e| {
                if e == "baseline" {
                    return Ok(("baseline".to_string(), ExtractorSpec::baseline()));
                }
                let path = Path::new(e);
                let spec = ExtractorSpec::from_manifest(path).map_err(|err| match err {
                    Error::PathNotFound(p) => Error::Config(format!("extractor manifest {} not found", p.display())),
                    other => other,
                })?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| spec.name().to_string());
                Ok((label, spec))
            })
            .collect()
    }

    /// Table labels for the classifiers: the kind alone when it is unique in
    /// the grid, otherwise the kind with its hyperparameters.
    pub fn classifier_labels(&self) -> Vec<String> {
        self.classifiers
            .iter()
            .map(|c| {
                let same_kind = self.classifiers.iter().filter(|o| o.kind() == c.kind()).count();
                if same_kind == 1 {
                    c.kind().to_string()
                } else {
                    c.to_string()
                }
            })
            .collect()
    }
}
