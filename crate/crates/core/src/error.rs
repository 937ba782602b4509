use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("path not found: {}", .0.display())]
    PathNotFound(PathBuf),

    #[error("class `{0}` contains no images")]
    EmptyClass(String),

    #[error("cannot decode image {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("degenerate split for class `{class}`: {test} of {total} entries would be held out")]
    DegenerateSplit { class: String, test: usize, total: usize },

    #[error("cannot load model {}: {reason}", path.display())]
    ModelLoad { path: PathBuf, reason: String },

    #[error("inference failed: {0}")]
    Inference(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("class {0} has no training samples")]
    MissingClass(u32),

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("label {label} is out of range for {classes} classes")]
    InvalidLabel { label: u32, classes: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the name of the grid cell that produced it.
    pub fn in_cell(self, cell: impl Into<String>) -> Error {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code used by the command-line tool: 2 for configuration
    /// problems, 3 for data or model problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidHyperparameter(_) => 2,
            Error::Cell { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
