#![allow(dead_code)]

use std::path::PathBuf;

use hefir::nn::{IntTensor, QuantizedModel, Shape};
use num_bigint::BigInt;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn mnist_model() -> QuantizedModel {
    QuantizedModel::load(&data("mnist_4bit.model.json")).unwrap()
}

pub fn mnist_images(offset: usize, count: usize) -> Vec<IntTensor> {
    let idx = hefir::io::read_images(data("test-images.idx3-ubyte")).unwrap();
    idx.images[offset..offset + count]
        .iter()
        .map(|px| IntTensor::from_pixels(Shape::new(28, 28, 1), px, 4).unwrap())
        .collect()
}

pub fn mnist_labels() -> Vec<u8> {
    hefir::io::read_labels(data("test-labels.idx1-ubyte")).unwrap()
}

/// Logits of the first 64 test images from the training script's float64
/// forward pass.
pub fn golden_logits() -> Vec<Vec<BigInt>> {
    let text = std::fs::read_to_string(data("mnist_logits_head.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["logits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|x| BigInt::from(x.as_i64().unwrap()))
                .collect()
        })
        .collect()
}
