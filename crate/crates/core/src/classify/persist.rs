//! Trained-model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic            6 bytes   "CMDL01"
//! kind             u8        1 knn | 2 gaussian_nb | 3 random_forest | 4 logistic_regression
//! payload_len      u64       bytes that follow
//! payload:
//!   dim            u32
//!   n_classes      u32
//!   standardizer   block     (input standardization, see below)
//!   knn:           u32 k, u32 n, n × u32 labels, n·dim × f32 features
//!   gaussian_nb:   f64 epsilon, K × f64 log priors, K·dim × f64 means, K·dim × f64 variances
//!   random_forest: u32 max_features, u32 min_samples_split, u64 seed, u32 n_trees,
//!                  per tree: u32 n_nodes, per node:
//!                    u8 0 (leaf), u32 class
//!                    u8 1 (split), u32 feature, f64 threshold, u32 left, u32 right
//!   logistic_regression: f64 l2, f64 l1, K·dim × f64 weights, K × f64 biases,
//!                  standardizer block (the model's own)
//!
//! standardizer block: u8 0 (absent) | u8 1, dim × f64 means, dim × f64 stds
//! ```
//!
//! Floats are stored as raw bits, so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use super::forest::{DecisionTree, RandomForestModel, TreeNode};
use super::knn::KnnModel;
use super::logreg::LogRegModel;
use super::naive_bayes::GaussianNbModel;
use super::standardize::Standardizer;
use super::{Model, TrainedClassifier};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 6] = b"CMDL01";

const KIND_KNN: u8 = 1;
const KIND_NB: u8 = 2;
const KIND_FOREST: u8 = 3;
const KIND_LOGREG: u8 = 4;

fn put_standardizer(w: &mut ByteWriter, s: Option<&Standardizer>) {
    match s {
        None => w.u8(0),
        Some(s) => {
            w.u8(1);
            w.f64s(s.means());
            w.f64s(s.stds());
        }
    }
}

fn get_standardizer(r: &mut ByteReader<'_>, dim: usize) -> Result<Option<Standardizer>> {
    match r.u8()? {
        0 => Ok(None),
        1 => {
            let means = r.f64s(dim)?;
            let stds = r.f64s(dim)?;
            Ok(Some(Standardizer::from_parts(means, stds)?))
        }
        t => Err(Error::Format(format!("bad standardizer tag {t}"))),
    }
}

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit in u32")))
}

pub fn encode_model(model: &TrainedClassifier) -> Result<Vec<u8>> {
    let mut p = ByteWriter::new();
    p.u32(u32_of(model.dim, "dim")?);
    p.u32(model.n_classes);
    put_standardizer(&mut p, model.standardizer.as_ref());
    let kind = match &model.model {
        Model::Knn(m) => {
            p.u32(u32_of(m.k, "k")?);
            p.u32(u32_of(m.labels.len(), "rows")?);
            p.u32s(&m.labels);
            p.f32s(&m.features);
            KIND_KNN
        }
        Model::GaussianNb(m) => {
            p.f64(m.epsilon);
            p.f64s(&m.class_log_priors);
            p.f64s(&m.means);
            p.f64s(&m.variances);
            KIND_NB
        }
        Model::RandomForest(m) => {
            p.u32(u32_of(m.max_features, "max_features")?);
            p.u32(u32_of(m.min_samples_split, "min_samples_split")?);
            p.u64(m.seed);
            p.u32(u32_of(m.trees.len(), "trees")?);
            for tree in &m.trees {
                p.u32(u32_of(tree.nodes.len(), "nodes")?);
                for node in &tree.nodes {
                    match *node {
                        TreeNode::Leaf { class } => {
                            p.u8(0);
                            p.u32(class);
                        }
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            p.u8(1);
                            p.u32(feature);
                            p.f64(threshold);
                            p.u32(left);
                            p.u32(right);
                        }
                    }
                }
            }
            KIND_FOREST
        }
        Model::LogReg(m) => {
            p.f64(m.l2);
            p.f64(m.l1);
            p.f64s(&m.weights);
            p.f64s(&m.biases);
            put_standardizer(&mut p, m.standardizer.as_ref());
            KIND_LOGREG
        }
    };
    let payload = p.into_inner();
    let mut out = ByteWriter::new();
    out.bytes(MODEL_MAGIC);
    out.u8(kind);
    out.u64(payload.len() as u64);
    out.bytes(&payload);
    Ok(out.into_inner())
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedClassifier> {
    let mut r = ByteReader::new(bytes);
    let magic = r
        .take(MODEL_MAGIC.len())
        .map_err(|_| Error::Format("file too short for a model header".into()))?;
    if magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad model magic {magic:02x?}")));
    }
    let kind = r.u8()?;
    let len = r.u64()? as usize;
    if len != r.remaining() {
        return Err(Error::Format(format!(
            "payload length {len} does not match the {} bytes present",
            r.remaining()
        )));
    }
    let dim = r.u32()? as usize;
    let n_classes = r.u32()?;
    let k = n_classes as usize;
    let standardizer = get_standardizer(&mut r, dim)?;

    let model = match kind {
        KIND_KNN => {
            let neighbours = r.u32()? as usize;
            let n = r.u32()? as usize;
            let labels = r.u32s(n)?;
            let features = r.f32s(n.saturating_mul(dim))?;
            if neighbours == 0 || neighbours > n {
                return Err(Error::Format(format!("k = {neighbours} invalid for {n} rows")));
            }
            Model::Knn(KnnModel {
                k: neighbours,
                dim,
                n_classes,
                features,
                labels,
            })
        }
        KIND_NB => Model::GaussianNb(GaussianNbModel {
            dim,
            epsilon: r.f64()?,
            class_log_priors: r.f64s(k)?,
            means: r.f64s(k.saturating_mul(dim))?,
            variances: r.f64s(k.saturating_mul(dim))?,
        }),
        KIND_FOREST => {
            let max_features = r.u32()? as usize;
            let min_samples_split = r.u32()? as usize;
            let seed = r.u64()?;
            let n_trees = r.u32()? as usize;
            let mut trees = Vec::with_capacity(n_trees.min(r.remaining()));
            for _ in 0..n_trees {
                let n_nodes = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(n_nodes.min(r.remaining()));
                for _ in 0..n_nodes {
                    nodes.push(match r.u8()? {
                        0 => TreeNode::Leaf { class: r.u32()? },
                        1 => TreeNode::Split {
                            feature: r.u32()?,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        },
                        t => return Err(Error::Format(format!("bad tree node tag {t}"))),
                    });
                }
                validate_tree(&nodes, dim, n_classes)?;
                trees.push(DecisionTree { nodes });
            }
            Model::RandomForest(RandomForestModel {
                dim,
                n_classes,
                max_features,
                min_samples_split,
                seed,
                trees,
            })
        }
        KIND_LOGREG => {
            let l2 = r.f64()?;
            let l1 = r.f64()?;
            let weights = r.f64s(k.saturating_mul(dim))?;
            let biases = r.f64s(k)?;
            let inner = get_standardizer(&mut r, dim)?;
            Model::LogReg(LogRegModel {
                dim,
                n_classes: k,
                weights,
                biases,
                l2,
                l1,
                standardizer: inner,
            })
        }
        other => return Err(Error::Format(format!("unknown model kind {other}"))),
    };
    r.finish()?;
    Ok(TrainedClassifier {
        dim,
        n_classes,
        standardizer,
        model,
    })
}

// Child indices must point forward so that prediction always terminates.
fn validate_tree(nodes: &[TreeNode], dim: usize, n_classes: u32) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Format("empty tree".into()));
    }
    for (i, node) in nodes.iter().enumerate() {
        match *node {
            TreeNode::Leaf { class } if class >= n_classes => {
                return Err(Error::Format(format!("leaf class {class} out of range")));
            }
            TreeNode::Split {
                feature, left, right, ..
            } => {
                let forward = |c: u32| (c as usize) > i && (c as usize) < nodes.len();
                if feature as usize >= dim || !forward(left) || !forward(right) {
                    return Err(Error::Format(format!("malformed split node {i}")));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn save_model(path: impl AsRef<Path>, model: &TrainedClassifier) -> Result<()> {
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedClassifier> {
    decode_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::super::ClassifierSpec;
    use super::*;
    use crate::featurex::FeatureMatrix;

    fn data() -> FeatureMatrix {
        let rows: Vec<Vec<f32>> = (0..30)
            .map(|i| vec![(i % 5) as f32 * 0.7, (i * 3 % 7) as f32 - 2.5, (i % 3) as f32])
            .collect();
        let labels = (0..30).map(|i| (i % 3) as u32).collect();
        FeatureMatrix::from_rows(&rows, labels, 3).unwrap()
    }

    #[test]
    fn every_kind_round_trips_exactly() {
        let x = data();
        let specs = [
            ClassifierSpec::Knn {
                k: 3,
                standardize: true,
            },
            ClassifierSpec::naive_bayes(),
            ClassifierSpec::RandomForest {
                n_trees: 5,
                max_features: None,
                min_samples_split: 2,
                seed: Some(4),
                standardize: false,
            },
            ClassifierSpec::logistic_regression(),
        ];
        for spec in &specs {
            let model = TrainedClassifier::fit(spec, &x, 1).unwrap();
            let bytes = encode_model(&model).unwrap();
            let back = decode_model(&bytes).unwrap();
            assert_eq!(back, model, "{spec}");
            assert_eq!(encode_model(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn corrupt_files_are_format_errors() {
        let model = TrainedClassifier::fit(&ClassifierSpec::naive_bayes(), &data(), 0).unwrap();
        let bytes = encode_model(&model).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_model(&bad_magic), Err(Error::Format(_))));

        assert!(matches!(decode_model(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(decode_model(&bytes[..4]), Err(Error::Format(_))));

        let mut bad_kind = bytes.clone();
        bad_kind[6] = 9;
        assert!(matches!(decode_model(&bad_kind), Err(Error::Format(_))));
    }
}
