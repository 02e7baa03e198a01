use std::path::Path;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quantize::{integerize, is_representable};
use super::spec::{LayerSpec, NetworkSpec, Shape};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "hefir-model";
pub const MODEL_VERSION: u32 = 1;

/// A layer with its integer weights (conv: `[filter][ky][kx][c_in/groups]`,
/// fully connected: `[out][in]` with `in = (y·W + x)·C + c`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(flatten)]
    pub spec: LayerSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<i64>,
    /// Optional per-output bias, already at the layer's output scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<i64>>,
}

impl Layer {
    pub fn plain(spec: LayerSpec) -> Self {
        Layer {
            spec,
            weights: Vec::new(),
            bias: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct InputSection {
    height: usize,
    width: usize,
    channels: usize,
    scale: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    architecture: String,
    bit_width: u32,
    input: InputSection,
    layers: Vec<Layer>,
}

/// Integer network weights plus the architecture they belong to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedModel {
    pub architecture: String,
    pub bit_width: u32,
    pub input: Shape,
    pub input_scale: u64,
    pub layers: Vec<Layer>,
}

impl QuantizedModel {
    pub fn spec(&self) -> NetworkSpec {
        NetworkSpec {
            name: self.architecture.clone(),
            input: self.input,
            input_scale: self.input_scale,
            layers: self.layers.iter().map(|l| l.spec.clone()).collect(),
        }
    }

    /// Checks shapes, weight counts, bias lengths and the `k`-bit weight
    /// grid. Known architecture names must match their reference layout.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        if let Ok(reference) = NetworkSpec::by_name(&self.architecture) {
            if reference.input != spec.input
                || reference.input_scale != spec.input_scale
                || reference.layers != spec.layers
            {
                return Err(Error::Model(format!(
                    "layers do not match the '{}' architecture",
                    self.architecture
                )));
            }
        }
        if !(1..=32).contains(&self.bit_width) {
            return Err(Error::Model(format!(
                "bit width {} out of range",
                self.bit_width
            )));
        }
        let shapes = spec.shapes()?;
        for (i, layer) in self.layers.iter().enumerate() {
            let want = layer.spec.weight_count(shapes[i]);
            if layer.weights.len() != want {
                return Err(Error::Model(format!(
                    "layer {} ({}) has {} weights, expected {want}",
                    i + 1,
                    layer.spec.name(),
                    layer.weights.len()
                )));
            }
            if let Some(bias) = &layer.bias {
                if bias.len() != layer.spec.output_units() {
                    return Err(Error::Model(format!(
                        "layer {} bias has {} entries, expected {}",
                        i + 1,
                        bias.len(),
                        layer.spec.output_units()
                    )));
                }
            }
            if let LayerSpec::Conv { weight_scale, .. }
            | LayerSpec::FullyConnected { weight_scale, .. } = layer.spec
            {
                if let Some(&w) = layer
                    .weights
                    .iter()
                    .find(|&&w| !is_representable(w, self.bit_width, weight_scale))
                {
                    return Err(Error::Model(format!(
                        "layer {} weight {w} is not a {}-bit value at scale {weight_scale}",
                        i + 1,
                        self.bit_width
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Model(format!("invalid model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unexpected format tag '{}'",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let model = QuantizedModel {
            architecture: file.architecture,
            bit_width: file.bit_width,
            input: Shape::new(file.input.height, file.input.width, file.input.channels),
            input_scale: file.input.scale,
            layers: file.layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            architecture: self.architecture.clone(),
            bit_width: self.bit_width,
            input: InputSection {
                height: self.input.height,
                width: self.input.width,
                channels: self.input.channels,
                scale: self.input_scale,
            },
            layers: self.layers.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Random weights on the `k`-bit grid; biases are left out.
    pub fn random<R: Rng + ?Sized>(
        spec: &NetworkSpec,
        bit_width: u32,
        rng: &mut R,
    ) -> Result<Self> {
        let shapes = spec.shapes()?;
        let levels = (1i64 << bit_width) - 1;
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let weights = match *l {
                    LayerSpec::Conv { weight_scale, .. }
                    | LayerSpec::FullyConnected { weight_scale, .. } => (0..l
                        .weight_count(shapes[i]))
                        .map(|_| {
                            integerize(rng.gen_range(-levels..=levels), bit_width, weight_scale)
                        })
                        .collect(),
                    _ => Vec::new(),
                };
                Layer {
                    spec: l.clone(),
                    weights,
                    bias: None,
                }
            })
            .collect();
        Ok(QuantizedModel {
            architecture: spec.name.clone(),
            bit_width,
            input: spec.input,
            input_scale: spec.input_scale,
            layers,
        })
    }

    /// Output scale after each layer (`[0]` is the input scale).
    pub fn scales(&self) -> Vec<BigUint> {
        let mut out = vec![BigUint::from(self.input_scale)];
        for l in &self.layers {
            let prev = out.last().unwrap().clone();
            out.push(match l.spec {
                LayerSpec::Conv { weight_scale, .. }
                | LayerSpec::FullyConnected { weight_scale, .. } => prev * weight_scale,
                LayerSpec::Square => &prev * &prev,
                LayerSpec::AvgPool { extent, .. } => prev * (extent * extent) as u64,
            });
        }
        out
    }
}
