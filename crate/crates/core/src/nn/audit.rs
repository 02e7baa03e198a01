//! Primitive-operation counts for homomorphic evaluation.

use serde::Serialize;

use super::model::QuantizedModel;
use super::oracle::conv_taps;
use super::spec::{LayerSpec, NetworkSpec};
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub mult_plain: u64,
    pub square: u64,
}

impl std::ops::Add for OpCounts {
    type Output = OpCounts;
    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            mult_plain: self.mult_plain + o.mult_plain,
            square: self.square + o.square,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub layer: usize,
    pub kind: &'static str,
    pub inputs: usize,
    pub outputs: usize,
    pub counts: OpCounts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Audit {
    pub layers: Vec<LayerCount>,
    pub total: OpCounts,
}

fn tally(
    spec: &NetworkSpec,
    mut weight_nonzero: impl FnMut(usize, usize) -> bool,
) -> Result<Audit> {
    let shapes = spec.shapes()?;
    let mut layers = Vec::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        let (input, output) = (shapes[i], shapes[i + 1]);
        let counts = match layer {
            LayerSpec::Conv { .. } => {
                let mut n = 0;
                for oy in 0..output.height {
                    for ox in 0..output.width {
                        for f in 0..output.channels {
                            n += conv_taps(layer, input, oy, ox, f)
                                .into_iter()
                                .filter(|&(_, w)| weight_nonzero(i, w))
                                .count() as u64;
                        }
                    }
                }
                OpCounts {
                    mult_plain: n,
                    square: 0,
                }
            }
            LayerSpec::FullyConnected { .. } => OpCounts {
                mult_plain: (0..output.channels * input.len())
                    .filter(|&w| weight_nonzero(i, w))
                    .count() as u64,
                square: 0,
            },
            LayerSpec::Square => OpCounts {
                mult_plain: 0,
                square: output.len() as u64,
            },
            LayerSpec::AvgPool { .. } => OpCounts::default(),
        };
        layers.push(LayerCount {
            layer: i + 1,
            kind: layer.name(),
            inputs: input.len(),
            outputs: output.len(),
            counts,
        });
    }
    let total = layers.iter().fold(OpCounts::default(), |a, l| a + l.counts);
    Ok(Audit { layers, total })
}

/// Counts for dense weights: one `HMultPlain` per weight tap that lands on
/// the feature map (padding taps cost nothing) and one `HSquare` per
/// activation squared.
pub fn count_ops(spec: &NetworkSpec) -> Result<Audit> {
    tally(spec, |_, _| true)
}

/// Counts for a concrete model: zero weights are skipped, as the evaluator
/// does.
pub fn count_model_ops(model: &QuantizedModel) -> Result<Audit> {
    let spec = model.spec();
    tally(&spec, |layer, w| model.layers[layer].weights[w] != 0)
}
