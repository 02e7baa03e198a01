//! Plaintext integer reference evaluation.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use super::model::{Layer, QuantizedModel};
use super::spec::{LayerSpec, Shape};
use super::tensor::IntTensor;
use crate::error::{Error, Result};

/// `(input index, weight index)` pairs feeding conv output `(oy, ox, f)`.
/// Taps that fall on zero padding are omitted.
pub fn conv_taps(
    layer: &LayerSpec,
    input: Shape,
    oy: usize,
    ox: usize,
    f: usize,
) -> Vec<(usize, usize)> {
    let LayerSpec::Conv {
        filters,
        kernel,
        stride,
        groups,
        ..
    } = *layer
    else {
        panic!("conv_taps on a non-conv layer");
    };
    let (ph, pw) = layer.pad();
    let cin = input.channels / groups;
    let c0 = (f / (filters / groups)) * cin;
    let mut taps = Vec::with_capacity(kernel[0] * kernel[1] * cin);
    for ky in 0..kernel[0] {
        let iy = (oy * stride[0] + ky) as isize - ph as isize;
        if iy < 0 || iy >= input.height as isize {
            continue;
        }
        for kx in 0..kernel[1] {
            let ix = (ox * stride[1] + kx) as isize - pw as isize;
            if ix < 0 || ix >= input.width as isize {
                continue;
            }
            for c in 0..cin {
                let w = ((f * kernel[0] + ky) * kernel[1] + kx) * cin + c;
                taps.push((input.index(iy as usize, ix as usize, c0 + c), w));
            }
        }
    }
    taps
}

/// Input indices summed into pooling output `(oy, ox, c)`.
pub fn pool_taps(
    extent: usize,
    stride: usize,
    input: Shape,
    oy: usize,
    ox: usize,
    c: usize,
) -> Vec<usize> {
    let mut taps = Vec::with_capacity(extent * extent);
    for dy in 0..extent {
        for dx in 0..extent {
            taps.push(input.index(oy * stride + dy, ox * stride + dx, c));
        }
    }
    taps
}

fn check_input(x: &IntTensor, want: Shape) -> Result<()> {
    if x.shape() != want {
        return Err(Error::Shape(format!(
            "expected input {}x{}x{}, got {}x{}x{}",
            want.height,
            want.width,
            want.channels,
            x.shape().height,
            x.shape().width,
            x.shape().channels
        )));
    }
    Ok(())
}

fn weight_scale(spec: &LayerSpec) -> u64 {
    match *spec {
        LayerSpec::Conv { weight_scale, .. } | LayerSpec::FullyConnected { weight_scale, .. } => {
            weight_scale
        }
        _ => 1,
    }
}

pub fn conv2d(x: &IntTensor, layer: &Layer) -> Result<IntTensor> {
    let input = x.shape();
    let out_shape = layer.spec.output_shape(input)?;
    if layer.weights.len() != layer.spec.weight_count(input) {
        return Err(Error::Shape(
            "conv weight count does not match input".into(),
        ));
    }
    let mut data = Vec::with_capacity(out_shape.len());
    for oy in 0..out_shape.height {
        for ox in 0..out_shape.width {
            for f in 0..out_shape.channels {
                let mut acc = BigInt::zero();
                for (i, w) in conv_taps(&layer.spec, input, oy, ox, f) {
                    let w = layer.weights[w];
                    if w != 0 {
                        acc += &x.data()[i] * w;
                    }
                }
                if let Some(b) = &layer.bias {
                    acc += b[f];
                }
                data.push(acc);
            }
        }
    }
    Ok(IntTensor::with_scale(
        out_shape,
        data,
        x.scale() * weight_scale(&layer.spec),
    ))
}

pub fn fully_connected(x: &IntTensor, layer: &Layer) -> Result<IntTensor> {
    let out_shape = layer.spec.output_shape(x.shape())?;
    let n_in = x.shape().len();
    if layer.weights.len() != out_shape.channels * n_in {
        return Err(Error::Shape(
            "fully connected weight count does not match input".into(),
        ));
    }
    let data = (0..out_shape.channels)
        .map(|o| {
            let mut acc = BigInt::zero();
            for (v, &w) in x
                .data()
                .iter()
                .zip(&layer.weights[o * n_in..(o + 1) * n_in])
            {
                if w != 0 {
                    acc += v * w;
                }
            }
            if let Some(b) = &layer.bias {
                acc += b[o];
            }
            acc
        })
        .collect();
    Ok(IntTensor::with_scale(
        out_shape,
        data,
        x.scale() * weight_scale(&layer.spec),
    ))
}

pub fn square_layer(x: &IntTensor) -> IntTensor {
    IntTensor::with_scale(
        x.shape(),
        x.data().iter().map(|v| v * v).collect(),
        x.scale() * x.scale(),
    )
}

/// Average pooling in sum form: window sums with `Δ` multiplied by `extent²`.
pub fn avg_pool(x: &IntTensor, extent: usize, stride: usize) -> Result<IntTensor> {
    let spec = LayerSpec::AvgPool { extent, stride };
    let input = x.shape();
    let out_shape = spec.output_shape(input)?;
    let mut data = Vec::with_capacity(out_shape.len());
    for oy in 0..out_shape.height {
        for ox in 0..out_shape.width {
            for c in 0..out_shape.channels {
                let mut acc = BigInt::zero();
                for i in pool_taps(extent, stride, input, oy, ox, c) {
                    acc += &x.data()[i];
                }
                data.push(acc);
            }
        }
    }
    Ok(IntTensor::with_scale(
        out_shape,
        data,
        x.scale() * BigUint::from((extent * extent) as u64),
    ))
}

pub fn apply_layer(x: &IntTensor, layer: &Layer) -> Result<IntTensor> {
    match layer.spec {
        LayerSpec::Conv { .. } => conv2d(x, layer),
        LayerSpec::Square => Ok(square_layer(x)),
        LayerSpec::AvgPool { extent, stride } => avg_pool(x, extent, stride),
        LayerSpec::FullyConnected { .. } => fully_connected(x, layer),
    }
}

/// Runs the model and returns the logits.
pub fn forward(model: &QuantizedModel, image: &IntTensor) -> Result<IntTensor> {
    Ok(forward_trace(model, image)?.pop().unwrap())
}

/// Runs the model and returns the output of every layer (input first).
pub fn forward_trace(model: &QuantizedModel, image: &IntTensor) -> Result<Vec<IntTensor>> {
    check_input(image, model.input)?;
    let mut trace = vec![image.clone()];
    for (i, layer) in model.layers.iter().enumerate() {
        let next = apply_layer(trace.last().unwrap(), layer)
            .map_err(|e| Error::Shape(format!("layer {} ({}): {e}", i + 1, layer.spec.name())))?;
        trace.push(next);
    }
    Ok(trace)
}

/// Index of the largest value; ties go to the lowest index.
pub fn classify(logits: &[BigInt]) -> usize {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate().skip(1) {
        if *v > logits[best] {
            best = i;
        }
    }
    best
}

/// Per-layer maximum `|value|` over a set of trace outputs.
pub fn observed_max(traces: &[Vec<IntTensor>]) -> Vec<BigUint> {
    let depth = traces.first().map_or(0, |t| t.len());
    (0..depth)
        .map(|l| {
            traces
                .iter()
                .map(|t| t[l].max_abs())
                .max()
                .unwrap_or_default()
        })
        .collect()
}

/// Signed logits for a batch of images (row per image).
pub fn forward_batch(model: &QuantizedModel, images: &[IntTensor]) -> Result<Vec<Vec<BigInt>>> {
    images
        .iter()
        .map(|img| Ok(forward(model, img)?.into_data()))
        .collect()
}
