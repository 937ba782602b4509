//! A tiny ONNX network for exercising the model-backed extractor without
//! downloading pretrained weights.
//!
//! Graph: `input [N,3,224,224]` → Conv(4 filters, 8×8, stride 8) → Relu
//! (`features`, `[N,4,28,28]`) → GlobalAveragePool → Flatten (`head`).
//! The extractor taps `features`, cutting the head off.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use prost::Message;
use tract_onnx::pb;

pub const CHANNELS: usize = 4;
pub const KERNEL: usize = 8;
pub const SIDE: usize = 224;
pub const OUT_SIDE: usize = SIDE / KERNEL;
pub const FLAT_DIM: usize = CHANNELS * OUT_SIDE * OUT_SIDE;

/// Deterministic filter weights `[4,3,8,8]` and biases `[4]`.
pub fn probe_weights() -> (Vec<f32>, Vec<f32>) {
    let weights = (0..CHANNELS * 3 * KERNEL * KERNEL)
        .map(|i| ((i * 37 % 101) as f32 / 101.0 - 0.5) * 0.2)
        .collect();
    let bias = vec![0.05, -0.1, 0.0, 0.2];
    (weights, bias)
}

/// Reference forward pass of the tapped tensor for one channels-first image.
pub fn probe_features_oracle(input: &[f32]) -> Vec<f32> {
    let (w, b) = probe_weights();
    let mut out = vec![0f32; FLAT_DIM];
    for o in 0..CHANNELS {
        for oy in 0..OUT_SIDE {
            for ox in 0..OUT_SIDE {
                let mut acc = f64::from(b[o]);
                for c in 0..3 {
                    for ky in 0..KERNEL {
                        for kx in 0..KERNEL {
                            let x = input[c * SIDE * SIDE + (oy * KERNEL + ky) * SIDE + ox * KERNEL + kx];
                            let wv = w[((o * 3 + c) * KERNEL + ky) * KERNEL + kx];
                            acc += f64::from(x) * f64::from(wv);
                        }
                    }
                }
                out[(o * OUT_SIDE + oy) * OUT_SIDE + ox] = acc.max(0.0) as f32;
            }
        }
    }
    out
}

fn tensor_type(dims: &[Option<i64>]) -> pb::TypeProto {
    use pb::tensor_shape_proto::{dimension::Value, Dimension};
    pb::TypeProto {
        denotation: String::new(),
        value: Some(pb::type_proto::Value::TensorType(pb::type_proto::Tensor {
            elem_type: pb::tensor_proto::DataType::Float as i32,
            shape: Some(pb::TensorShapeProto {
                dim: dims
                    .iter()
                    .map(|d| Dimension {
                        denotation: String::new(),
                        value: Some(match d {
                            Some(v) => Value::DimValue(*v),
                            None => Value::DimParam("N".into()),
                        }),
                    })
                    .collect(),
            }),
        })),
    }
}

fn value_info(name: &str, dims: &[Option<i64>]) -> pb::ValueInfoProto {
    pb::ValueInfoProto {
        name: name.into(),
        r#type: Some(tensor_type(dims)),
        ..Default::default()
    }
}

fn ints(name: &str, values: &[i64]) -> pb::AttributeProto {
    pb::AttributeProto {
        name: name.into(),
        r#type: pb::attribute_proto::AttributeType::Ints as i32,
        ints: values.to_vec(),
        ..Default::default()
    }
}

fn int(name: &str, value: i64) -> pb::AttributeProto {
    pb::AttributeProto {
        name: name.into(),
        r#type: pb::attribute_proto::AttributeType::Int as i32,
        i: value,
        ..Default::default()
    }
}

fn node(op: &str, inputs: &[&str], output: &str, attribute: Vec<pb::AttributeProto>) -> pb::NodeProto {
    pb::NodeProto {
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![output.into()],
        name: format!("{op}_{output}"),
        op_type: op.into(),
        attribute,
        ..Default::default()
    }
}

fn initializer(name: &str, dims: &[i64], data: Vec<f32>) -> pb::TensorProto {
    pb::TensorProto {
        name: name.into(),
        dims: dims.to_vec(),
        data_type: pb::tensor_proto::DataType::Float as i32,
        float_data: data,
        ..Default::default()
    }
}

/// Serialized ONNX model bytes.
pub fn probe_model_bytes() -> Vec<u8> {
    let (w, b) = probe_weights();
    let k = KERNEL as i64;
    let graph = pb::GraphProto {
        name: "probe".into(),
        node: vec![
            node(
                "Conv",
                &["input", "conv_w", "conv_b"],
                "conv",
                vec![ints("kernel_shape", &[k, k]), ints("strides", &[k, k])],
            ),
            node("Relu", &["conv"], "features", vec![]),
            node("GlobalAveragePool", &["features"], "pooled", vec![]),
            node("Flatten", &["pooled"], "head", vec![int("axis", 1)]),
        ],
        initializer: vec![
            initializer("conv_w", &[CHANNELS as i64, 3, k, k], w),
            initializer("conv_b", &[CHANNELS as i64], b),
        ],
        input: vec![value_info(
            "input",
            &[None, Some(3), Some(SIDE as i64), Some(SIDE as i64)],
        )],
        output: vec![value_info("head", &[None, Some(CHANNELS as i64)])],
        ..Default::default()
    };
    pb::ModelProto {
        ir_version: 7,
        opset_import: vec![pb::OperatorSetIdProto {
            domain: String::new(),
            version: 13,
        }],
        producer_name: "citrusfx-probe".into(),
        graph: Some(graph),
        ..Default::default()
    }
    .encode_to_vec()
}

/// Writes `<name>.onnx` and a manifest `<name>.json` into `dir` and returns
/// the manifest path. `tap` is `flatten_last_conv` or `global_average_pool`.
pub fn write_probe_model(dir: &Path, name: &str, tap: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.onnx")), probe_model_bytes())?;
    let output_dim = if tap == "global_average_pool" {
        CHANNELS
    } else {
        FLAT_DIM
    };
    let manifest = serde_json::json!({
        "kind": "vgg16",
        "input_name": "input",
        "output_name": "features",
        "preprocessing": "unit_scale_torch",
        "channel_order_expected": "rgb",
        "tap": tap,
        "output_dim": output_dim,
    });
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(path)
}
