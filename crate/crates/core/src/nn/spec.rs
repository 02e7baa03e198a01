use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature-map shape `(height, width, channels)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Shape {
            height,
            width,
            channels,
        }
    }

    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `(y, x, c)`; channels vary fastest.
    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }
}

/// One layer of a network, without weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        filters: usize,
        /// `[f_h, f_w]`
        kernel: [usize; 2],
        /// `[s_h, s_w]`
        stride: [usize; 2],
        padding: bool,
        #[serde(default = "one")]
        groups: usize,
        weight_scale: u64,
    },
    Square,
    AvgPool {
        extent: usize,
        stride: usize,
    },
    FullyConnected {
        outputs: usize,
        weight_scale: u64,
    },
}

fn one() -> usize {
    1
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Square => "square",
            LayerSpec::AvgPool { .. } => "avg_pool",
            LayerSpec::FullyConnected { .. } => "fully_connected",
        }
    }

    /// Zero padding added on the top/left edge (the bottom/right edge gets
    /// the same amount).
    pub fn pad(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Conv {
                kernel,
                padding: true,
                ..
            } => ((kernel[0] - 1) / 2, (kernel[1] - 1) / 2),
            _ => (0, 0),
        }
    }

    /// Number of weights the layer expects for the given input shape.
    pub fn weight_count(&self, input: Shape) -> usize {
        match *self {
            LayerSpec::Conv {
                filters,
                kernel,
                groups,
                ..
            } => filters * kernel[0] * kernel[1] * (input.channels / groups),
            LayerSpec::FullyConnected { outputs, .. } => outputs * input.len(),
            _ => 0,
        }
    }

    /// Output count for layers that take weights (filters or outputs).
    pub fn output_units(&self) -> usize {
        match *self {
            LayerSpec::Conv { filters, .. } => filters,
            LayerSpec::FullyConnected { outputs, .. } => outputs,
            _ => 0,
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match *self {
            LayerSpec::Conv {
                filters,
                kernel,
                stride,
                groups,
                ..
            } => {
                if filters == 0 || kernel.contains(&0) || stride.contains(&0) || groups == 0 {
                    return Err(Error::Shape("conv dimensions must be positive".into()));
                }
                if !input.channels.is_multiple_of(groups) || !filters.is_multiple_of(groups) {
                    return Err(Error::Shape(format!(
                        "groups {groups} must divide input channels {} and filters {filters}",
                        input.channels
                    )));
                }
                let (ph, pw) = self.pad();
                let h = input.height + 2 * ph;
                let w = input.width + 2 * pw;
                if h < kernel[0] || w < kernel[1] {
                    return Err(Error::Shape(format!(
                        "kernel {}x{} larger than input {}x{}",
                        kernel[0], kernel[1], input.height, input.width
                    )));
                }
                Ok(Shape::new(
                    (h - kernel[0]) / stride[0] + 1,
                    (w - kernel[1]) / stride[1] + 1,
                    filters,
                ))
            }
            LayerSpec::Square => Ok(input),
            LayerSpec::AvgPool { extent, stride } => {
                if extent == 0 || stride == 0 || input.height < extent || input.width < extent {
                    return Err(Error::Shape("invalid pooling window".into()));
                }
                Ok(Shape::new(
                    (input.height - extent) / stride + 1,
                    (input.width - extent) / stride + 1,
                    input.channels,
                ))
            }
            LayerSpec::FullyConnected { outputs, .. } => {
                if outputs == 0 {
                    return Err(Error::Shape("fully connected layer needs outputs".into()));
                }
                Ok(Shape::new(1, 1, outputs))
            }
        }
    }
}

/// Ordered layer list with the input shape and input scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input: Shape,
    pub input_scale: u64,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// Shapes before the first layer and after each layer.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut out = vec![self.input];
        for (i, layer) in self.layers.iter().enumerate() {
            let s = layer
                .output_shape(*out.last().unwrap())
                .map_err(|e| Error::Shape(format!("layer {} ({}): {e}", i + 1, layer.name())))?;
            out.push(s);
        }
        Ok(out)
    }

    pub fn output_shape(&self) -> Result<Shape> {
        Ok(*self.shapes()?.last().unwrap())
    }

    /// Number of ciphertext-ciphertext multiplications on the longest path.
    pub fn square_depth(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Square))
            .count()
    }

    pub fn by_name(name: &str) -> Result<NetworkSpec> {
        match name {
            "mnist" => Ok(Self::mnist()),
            "cifar10" => Ok(Self::cifar10()),
            "toy" => Ok(Self::toy()),
            _ => Err(Error::Model(format!("unknown architecture '{name}'"))),
        }
    }

    /// The 5-layer MNIST network. The second convolution reads its 5 input
    /// channels in 5 groups (10 filters per channel), which is what its
    /// 25-multiplications-per-output count implies.
    pub fn mnist() -> NetworkSpec {
        NetworkSpec {
            name: "mnist".into(),
            input: Shape::new(28, 28, 1),
            input_scale: 4,
            layers: vec![
                LayerSpec::Conv {
                    filters: 5,
                    kernel: [5, 5],
                    stride: [2, 2],
                    padding: false,
                    groups: 1,
                    weight_scale: 15,
                },
                LayerSpec::Square,
                LayerSpec::Conv {
                    filters: 50,
                    kernel: [5, 5],
                    stride: [2, 2],
                    padding: false,
                    groups: 5,
                    weight_scale: 15,
                },
                LayerSpec::Square,
                LayerSpec::FullyConnected {
                    outputs: 10,
                    weight_scale: 15,
                },
            ],
        }
    }

    /// The 11-layer CIFAR-10 network.
    pub fn cifar10() -> NetworkSpec {
        let conv = |filters, weight_scale| LayerSpec::Conv {
            filters,
            kernel: [3, 3],
            stride: [1, 1],
            padding: true,
            groups: 1,
            weight_scale,
        };
        let pool = LayerSpec::AvgPool {
            extent: 2,
            stride: 2,
        };
        NetworkSpec {
            name: "cifar10".into(),
            input: Shape::new(32, 32, 3),
            input_scale: 255,
            layers: vec![
                conv(32, 10000),
                LayerSpec::Square,
                pool.clone(),
                conv(64, 4095),
                LayerSpec::Square,
                pool.clone(),
                conv(128, 10000),
                LayerSpec::Square,
                pool,
                LayerSpec::FullyConnected {
                    outputs: 256,
                    weight_scale: 1023,
                },
                LayerSpec::FullyConnected {
                    outputs: 10,
                    weight_scale: 63,
                },
            ],
        }
    }

    /// Small test network: 8×8 input, 2 filters of 3×3 stride 2, square,
    /// 3 outputs.
    pub fn toy() -> NetworkSpec {
        NetworkSpec {
            name: "toy".into(),
            input: Shape::new(8, 8, 1),
            input_scale: 4,
            layers: vec![
                LayerSpec::Conv {
                    filters: 2,
                    kernel: [3, 3],
                    stride: [2, 2],
                    padding: false,
                    groups: 1,
                    weight_scale: 15,
                },
                LayerSpec::Square,
                LayerSpec::FullyConnected {
                    outputs: 3,
                    weight_scale: 15,
                },
            ],
        }
    }
}
