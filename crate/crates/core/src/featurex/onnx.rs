use std::fs::File;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use tract_onnx::prelude::*;

use super::{ExtractorSpec, Tap};
use crate::dataset::IMAGE_SIDE;
use crate::error::{Error, Result};

type Plan = TypedRunnableModel<TypedModel>;

/// An ONNX graph cut at the tapped tensor, compiled for a fixed batch size.
/// Short final batches are zero-padded and the padding rows discarded.
pub(crate) struct OnnxGraph {
    plan: Plan,
    batch: usize,
    /// Tapped tensor shape without the batch axis.
    sample_shape: Vec<usize>,
    hash: String,
}

fn file_sha256(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

impl OnnxGraph {
    pub(crate) fn load(spec: &ExtractorSpec, batch: usize) -> Result<Self> {
        let path = spec
            .model_path
            .as_deref()
            .ok_or_else(|| Error::Config("model_path is required".into()))?;
        let load_err = |reason: String| Error::ModelLoad {
            path: path.to_path_buf(),
            reason,
        };
        let hash = file_sha256(path).map_err(|e| load_err(e.to_string()))?;
        let input = spec.input_name.as_deref().unwrap_or_default();
        let output = spec.output_name.as_deref().unwrap_or_default();

        let typed = tract_onnx::onnx()
            .model_for_path(path)
            .and_then(|m| m.with_input_names([input]))
            .and_then(|m| m.with_output_names([output]))
            .and_then(|m| m.with_input_fact(0, f32::fact([batch, 3, IMAGE_SIDE, IMAGE_SIDE]).into()))
            .and_then(|m| m.into_optimized())
            .map_err(|e| load_err(format!("{e:#}")))?;

        let shape: Vec<usize> = typed
            .output_fact(0)
            .ok()
            .and_then(|f| f.shape.as_concrete().map(|s| s.to_vec()))
            .ok_or_else(|| load_err(format!("tapped tensor `{output}` has no concrete shape")))?;
        if shape.first() != Some(&batch) {
            return Err(Error::ShapeMismatch(format!(
                "tapped tensor `{output}` has shape {shape:?}; expected a leading batch axis of {batch}"
            )));
        }
        let sample_shape = shape[1..].to_vec();
        let tapped_dim = match spec.tap {
            Tap::FlattenLastConv => sample_shape.iter().product::<usize>(),
            Tap::GlobalAveragePool => {
                if sample_shape.len() != 3 {
                    return Err(Error::ShapeMismatch(format!(
                        "global average pooling needs a C×H×W tap, got {sample_shape:?}"
                    )));
                }
                sample_shape[0]
            }
        };
        if tapped_dim != spec.output_dim {
            return Err(Error::ShapeMismatch(format!(
                "tapped tensor `{output}` yields {tapped_dim} features per image, manifest declares {}",
                spec.output_dim
            )));
        }

        let plan = typed.into_runnable().map_err(|e| load_err(format!("{e:#}")))?;
        Ok(Self {
            plan,
            batch,
            sample_shape,
            hash,
        })
    }

    pub(crate) fn content_hash(&self) -> &str {
        &self.hash
    }

    /// Runs preprocessed channels-first inputs and returns the concatenated
    /// feature rows.
    pub(crate) fn run(&self, inputs: &[Vec<f32>], spec: &ExtractorSpec) -> Result<Vec<f32>> {
        let per_image = 3 * IMAGE_SIDE * IMAGE_SIDE;
        let batches: Vec<Vec<f32>> = inputs
            .par_chunks(self.batch)
            .map(|chunk| {
                let mut data = vec![0f32; self.batch * per_image];
                for (slot, input) in data.chunks_exact_mut(per_image).zip(chunk) {
                    slot.copy_from_slice(input);
                }
                let tensor = Tensor::from_shape(&[self.batch, 3, IMAGE_SIDE, IMAGE_SIDE], &data)
                    .map_err(|e| Error::Inference(format!("{e:#}")))?;
                let outputs = self
                    .plan
                    .run(tvec!(tensor.into()))
                    .map_err(|e| Error::Inference(format!("{e:#}")))?;
                let view = outputs[0]
                    .to_array_view::<f32>()
                    .map_err(|e| Error::Inference(format!("{e:#}")))?;
                let flat: Vec<f32> = view.iter().copied().collect();
                let sample_len: usize = self.sample_shape.iter().product();
                if flat.len() != self.batch * sample_len {
                    return Err(Error::ShapeMismatch(format!(
                        "graph produced {} values for a batch of {}",
                        flat.len(),
                        self.batch
                    )));
                }
                let mut rows = Vec::with_capacity(chunk.len() * spec.output_dim);
                for sample in flat.chunks_exact(sample_len).take(chunk.len()) {
                    match spec.tap {
                        Tap::FlattenLastConv => rows.extend_from_slice(sample),
                        Tap::GlobalAveragePool => {
                            let plane = sample_len / self.sample_shape[0];
                            rows.extend(
                                sample
                                    .chunks_exact(plane)
                                    .map(|c| (c.iter().map(|&v| f64::from(v)).sum::<f64>() / plane as f64) as f32),
                            );
                        }
                    }
                }
                if rows.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Inference("graph produced non-finite features".into()));
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        Ok(batches.concat())
    }
}
