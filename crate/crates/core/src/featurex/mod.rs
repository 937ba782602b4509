//! Image → flat feature vector.
//!
//! Two families of extractor sit behind [`Extractor`]:
//!
//! * CNN graphs loaded from ONNX files (VGG16, VGG19, ResNet50). The
//!   classification head is not run; the activation named in the model
//!   manifest is read out and flattened in the graph's native element order,
//!   or averaged over spatial positions when the tap is
//!   [`Tap::GlobalAveragePool`].
//! * A weight-free baseline (joint RGB histogram + grayscale thumbnail) that
//!   needs no model file.

mod baseline;
#[cfg(feature = "onnx")]
mod onnx;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_image, ImageTensor};
use crate::error::{Error, Result};

pub use baseline::{baseline_extract, BASELINE_DIM, HISTOGRAM_BINS, THUMBNAIL_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    Vgg16,
    Vgg19,
    Resnet50,
    Baseline,
}

impl ExtractorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractorKind::Vgg16 => "vgg16",
            ExtractorKind::Vgg19 => "vgg19",
            ExtractorKind::Resnet50 => "resnet50",
            ExtractorKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Input normalization expected by a model's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    /// Subtract the ImageNet channel means (123.68, 116.779, 103.939), given
    /// on a 0–255 scale and rescaled by [`ExtractorSpec::pixel_range`].
    MeanSubtractCaffe,
    /// `(v - mean) / std` with the torchvision ImageNet constants.
    UnitScaleTorch,
    None,
}

impl Preprocessing {
    #[cfg_attr(not(feature = "onnx"), allow(dead_code))]
    fn as_str(self) -> &'static str {
        match self {
            Preprocessing::MeanSubtractCaffe => "mean_subtract_caffe",
            Preprocessing::UnitScaleTorch => "unit_scale_torch",
            Preprocessing::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelOrder {
    Rgb,
    Bgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tap {
    FlattenLastConv,
    GlobalAveragePool,
}

impl Tap {
    #[cfg_attr(not(feature = "onnx"), allow(dead_code))]
    fn as_str(self) -> &'static str {
        match self {
            Tap::FlattenLastConv => "flatten_last_conv",
            Tap::GlobalAveragePool => "global_average_pool",
        }
    }
}

/// ImageNet channel means on a 0–255 scale, RGB order.
pub const CAFFE_MEAN_RGB: [f32; 3] = [123.68, 116.779, 103.939];
pub const TORCH_MEAN_RGB: [f32; 3] = [0.485, 0.456, 0.406];
pub const TORCH_STD_RGB: [f32; 3] = [0.229, 0.224, 0.225];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorSpec {
    pub kind: ExtractorKind,
    pub model_path: Option<PathBuf>,
    pub input_name: Option<String>,
    pub output_name: Option<String>,
    pub preprocessing: Preprocessing,
    pub channel_order_expected: ChannelOrder,
    pub tap: Tap,
    pub output_dim: usize,
    /// Scale of the pixel values handed to the model: inputs are multiplied
    /// by this before mean subtraction. `1.0` keeps the canonical `[0, 1]`
    /// range; Keras-exported caffe-style weights expect `255.0`.
    pub pixel_range: f32,
}

/// On-disk model manifest, a JSON file next to the `.onnx` graph.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelManifest {
    kind: ExtractorKind,
    #[serde(default)]
    input_name: Option<String>,
    #[serde(default)]
    output_name: Option<String>,
    preprocessing: Preprocessing,
    channel_order_expected: ChannelOrder,
    tap: Tap,
    output_dim: usize,
    #[serde(default)]
    model_path: Option<PathBuf>,
    #[serde(default)]
    pixel_range: Option<f32>,
}

impl ExtractorSpec {
    pub fn baseline() -> Self {
        Self {
            kind: ExtractorKind::Baseline,
            model_path: None,
            input_name: None,
            output_name: None,
            preprocessing: Preprocessing::None,
            channel_order_expected: ChannelOrder::Rgb,
            tap: Tap::FlattenLastConv,
            output_dim: BASELINE_DIM,
            pixel_range: 1.0,
        }
    }

    /// Reads a model manifest. The graph is `model_path` when given (relative
    /// to the manifest's directory), otherwise the manifest path with an
    /// `.onnx` extension.
    pub fn from_manifest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::PathNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let manifest: ModelManifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let model_path = match manifest.kind {
            ExtractorKind::Baseline => None,
            _ => Some(match manifest.model_path {
                Some(p) if p.is_absolute() => p,
                Some(p) => path.parent().unwrap_or(Path::new("")).join(p),
                None => path.with_extension("onnx"),
            }),
        };
        let spec = Self {
            kind: manifest.kind,
            model_path,
            input_name: manifest.input_name,
            output_name: manifest.output_name,
            preprocessing: manifest.preprocessing,
            channel_order_expected: manifest.channel_order_expected,
            tap: manifest.tap,
            output_dim: manifest.output_dim,
            pixel_range: manifest.pixel_range.unwrap_or(1.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("{} extractor: {msg}", self.kind)));
        if !(self.pixel_range.is_finite() && self.pixel_range > 0.0) {
            return bad("pixel_range must be positive");
        }
        if self.kind == ExtractorKind::Baseline {
            if self.model_path.is_some() {
                return bad("the baseline takes no model file");
            }
            if self.output_dim != BASELINE_DIM {
                return bad("the baseline has output_dim 576");
            }
            if self.preprocessing != Preprocessing::None {
                return bad("the baseline uses preprocessing `none`");
            }
            return Ok(());
        }
        if self.model_path.is_none() {
            return bad("model_path is required");
        }
        if self.input_name.is_none() || self.output_name.is_none() {
            return bad("input_name and output_name are required");
        }
        if self.output_dim == 0 {
            return bad("output_dim must be positive");
        }
        Ok(())
    }

    /// Short name used in result tables.
    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }
}

/// Converts a canonical RGB image into the model's channels-first input:
/// channel order per `channel_order_expected`, values normalized per
/// `preprocessing`. Output length is `3 * height * width`.
pub fn preprocess_for_model(img: &ImageTensor, spec: &ExtractorSpec) -> Vec<f32> {
    let plane = img.height() * img.width();
    let mut out = vec![0f32; 3 * plane];
    for out_channel in 0..3 {
        let source = match spec.channel_order_expected {
            ChannelOrder::Rgb => out_channel,
            ChannelOrder::Bgr => 2 - out_channel,
        };
        let dst = &mut out[out_channel * plane..][..plane];
        for (d, px) in dst.iter_mut().zip(img.pixels().chunks_exact(3)) {
            *d = match spec.preprocessing {
                Preprocessing::None => px[source],
                Preprocessing::UnitScaleTorch => (px[source] - TORCH_MEAN_RGB[source]) / TORCH_STD_RGB[source],
                Preprocessing::MeanSubtractCaffe => (px[source] - CAFFE_MEAN_RGB[source] / 255.0) * spec.pixel_range,
            };
        }
    }
    out
}

/// `rows × dim` float32 features with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    n_classes: u32,
    values: Vec<f32>,
    labels: Vec<u32>,
    extractor_id: String,
}

impl FeatureMatrix {
    pub fn new(
        dim: usize,
        n_classes: u32,
        values: Vec<f32>,
        labels: Vec<u32>,
        extractor_id: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("feature dimension is zero".into()));
        }
        if values.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} rows of dimension {dim}",
                values.len(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidLabel {
                label,
                classes: n_classes as usize,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite feature value".into()));
        }
        Ok(Self {
            dim,
            n_classes,
            values,
            labels,
            extractor_id: extractor_id.into(),
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f32>], labels: Vec<u32>, n_classes: u32) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(dim, n_classes, rows.concat(), labels, "inline")
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn extractor_id(&self) -> &str {
        &self.extractor_id
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn view(&self) -> Rows<'_> {
        Rows {
            dim: self.dim,
            data: &self.values,
        }
    }

    /// Copy of the selected rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            dim: self.dim,
            n_classes: self.n_classes,
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            extractor_id: self.extractor_id.clone(),
        }
    }
}

/// Borrowed row-major block of query rows.
#[derive(Debug, Clone, Copy)]
pub struct Rows<'a> {
    dim: usize,
    data: &'a [f32],
}

impl<'a> Rows<'a> {
    pub fn new(data: &'a [f32], dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &'a [f32]> + 'a {
        self.data.chunks_exact(self.dim)
    }

    pub fn expect_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::ShapeMismatch(format!(
                "queries have dimension {}, model expects {dim}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// A loaded feature extractor, ready to process many images.
pub struct Extractor {
    spec: ExtractorSpec,
    id: String,
    backend: Backend,
}

enum Backend {
    Baseline,
    #[cfg(feature = "onnx")]
    Onnx(onnx::OnnxGraph),
}

/// Images decoded at once when extracting from files.
const DECODE_CHUNK: usize = 64;

impl Extractor {
    /// Loads the extractor described by `spec` with the default batch size.
    pub fn load(spec: &ExtractorSpec) -> Result<Self> {
        Self::with_batch_size(spec, 8)
    }

    pub fn with_batch_size(spec: &ExtractorSpec, batch_size: usize) -> Result<Self> {
        spec.validate()?;
        if batch_size == 0 {
            return Err(Error::InvalidHyperparameter("batch_size must be positive".into()));
        }
        if spec.kind == ExtractorKind::Baseline {
            return Ok(Self {
                spec: spec.clone(),
                id: baseline::BASELINE_ID.to_string(),
                backend: Backend::Baseline,
            });
        }
        Self::load_graph(spec, batch_size)
    }

    #[cfg(feature = "onnx")]
    fn load_graph(spec: &ExtractorSpec, batch_size: usize) -> Result<Self> {
        let graph = onnx::OnnxGraph::load(spec, batch_size)?;
        let id = format!(
            "{}:{}:{}:{}:{}",
            spec.kind,
            spec.tap.as_str(),
            spec.preprocessing.as_str(),
            match spec.channel_order_expected {
                ChannelOrder::Rgb => "rgb",
                ChannelOrder::Bgr => "bgr",
            },
            &graph.content_hash()[..16],
        );
        let id = if spec.pixel_range != 1.0 {
            format!("{id}:x{}", spec.pixel_range)
        } else {
            id
        };
        Ok(Self {
            spec: spec.clone(),
            id,
            backend: Backend::Onnx(graph),
        })
    }

    #[cfg(not(feature = "onnx"))]
    fn load_graph(spec: &ExtractorSpec, _batch_size: usize) -> Result<Self> {
        Err(Error::ModelLoad {
            path: spec.model_path.clone().unwrap_or_default(),
            reason: "built without the `onnx` feature".into(),
        })
    }

    pub fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }

    /// Identity recorded with every feature matrix: kind, tap, input
    /// convention and a prefix of the model file's SHA-256.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.spec.output_dim
    }

    /// One feature row per image, in input order.
    pub fn extract_rows(&self, images: &[ImageTensor]) -> Result<Vec<f32>> {
        match &self.backend {
            Backend::Baseline => Ok(images
                .par_iter()
                .map(baseline_extract)
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .map(|v| v as f32)
                .collect()),
            #[cfg(feature = "onnx")]
            Backend::Onnx(graph) => {
                let inputs: Vec<Vec<f32>> = images
                    .par_iter()
                    .map(|img| {
                        if img.height() != crate::dataset::IMAGE_SIDE || img.width() != crate::dataset::IMAGE_SIDE {
                            return Err(Error::ShapeMismatch(format!(
                                "model input must be 224x224, got {}x{}",
                                img.height(),
                                img.width()
                            )));
                        }
                        Ok(preprocess_for_model(img, &self.spec))
                    })
                    .collect::<Result<_>>()?;
                graph.run(&inputs, &self.spec)
            }
        }
    }

    pub fn extract(&self, images: &[ImageTensor], labels: &[u32], n_classes: u32) -> Result<FeatureMatrix> {
        if images.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let values = self.extract_rows(images)?;
        FeatureMatrix::new(self.dim(), n_classes, values, labels.to_vec(), self.id.clone())
    }

    /// Decodes and extracts image files in chunks so that only a bounded
    /// number of decoded images is alive at once.
    pub fn extract_files(&self, paths: &[PathBuf], labels: &[u32], n_classes: u32) -> Result<FeatureMatrix> {
        if paths.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} files but {} labels",
                paths.len(),
                labels.len()
            )));
        }
        let mut values = Vec::with_capacity(paths.len() * self.dim());
        for chunk in paths.chunks(DECODE_CHUNK) {
            let images: Vec<ImageTensor> = chunk.par_iter().map(load_image).collect::<Result<_>>()?;
            values.extend(self.extract_rows(&images)?);
        }
        FeatureMatrix::new(self.dim(), n_classes, values, labels.to_vec(), self.id.clone())
    }
}

/// Loads `spec` and extracts one row per image.
pub fn extract_features(
    images: &[ImageTensor],
    labels: &[u32],
    n_classes: u32,
    spec: &ExtractorSpec,
) -> Result<FeatureMatrix> {
    Extractor::load(spec)?.extract(images, labels, n_classes)
}
