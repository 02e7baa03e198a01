//! Worst-case magnitude certificate for a quantized network.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::nn::model::{Layer, QuantizedModel};
use crate::nn::oracle::{conv_taps, pool_taps};
use crate::nn::spec::{LayerSpec, Shape};

/// Tracks the scale `Δ` and an exact interval `[lo, hi]` for every
/// feature-map position, layer by layer.
#[derive(Clone, Debug)]
pub struct ScaleTracker {
    t_total: BigUint,
    shape: Shape,
    scale: BigUint,
    lo: Vec<BigInt>,
    hi: Vec<BigInt>,
    layers_done: usize,
    history: Vec<BigUint>,
}

fn mag(v: &BigInt) -> BigUint {
    v.abs().to_biguint().unwrap()
}

impl ScaleTracker {
    /// Inputs range over `[0, input_max]` at scale `input_scale`.
    pub fn new(input: Shape, input_scale: u64, input_max: u64, t_total: BigUint) -> Result<Self> {
        let mut tr = ScaleTracker {
            t_total,
            shape: input,
            scale: BigUint::from(input_scale),
            lo: vec![BigInt::zero(); input.len()],
            hi: vec![BigInt::from(input_max); input.len()],
            layers_done: 0,
            history: Vec::new(),
        };
        tr.check("input")?;
        Ok(tr)
    }

    pub fn for_model(model: &QuantizedModel, t_total: BigUint) -> Result<Self> {
        Self::new(model.input, model.input_scale, model.input_scale, t_total)
    }

    /// Tracks every layer of `model`.
    pub fn track_model(model: &QuantizedModel, t_total: BigUint) -> Result<Self> {
        let mut tr = Self::for_model(model, t_total)?;
        for layer in &model.layers {
            tr.track_layer(layer)?;
        }
        Ok(tr)
    }

    pub fn scale(&self) -> &BigUint {
        &self.scale
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Current bound on `|value|`.
    pub fn bound(&self) -> BigUint {
        self.lo
            .iter()
            .chain(&self.hi)
            .map(mag)
            .max()
            .unwrap_or_default()
    }

    /// Bound after the input and after every tracked layer.
    pub fn history(&self) -> &[BigUint] {
        &self.history
    }

    pub fn intervals(&self) -> (&[BigInt], &[BigInt]) {
        (&self.lo, &self.hi)
    }

    fn check(&mut self, what: &str) -> Result<()> {
        let b = self.bound();
        if &b * 2u32 >= self.t_total {
            return Err(Error::Capacity(format!(
                "{what}: worst-case magnitude 2^{:.2} does not fit the plaintext modulus 2^{:.2}",
                log2(&b),
                log2(&self.t_total)
            )));
        }
        self.history.push(b);
        Ok(())
    }

    pub fn track_layer(&mut self, layer: &Layer) -> Result<()> {
        let input = self.shape;
        let out = layer.spec.output_shape(input)?;
        let (lo, hi) = match layer.spec {
            LayerSpec::Conv { weight_scale, .. } => {
                let mut lo = Vec::with_capacity(out.len());
                let mut hi = Vec::with_capacity(out.len());
                for oy in 0..out.height {
                    for ox in 0..out.width {
                        for f in 0..out.channels {
                            let taps = conv_taps(&layer.spec, input, oy, ox, f)
                                .into_iter()
                                .map(|(i, w)| (i, layer.weights[w]));
                            let (l, h) = self.weighted(taps);
                            lo.push(l);
                            hi.push(h);
                        }
                    }
                }
                self.scale *= weight_scale;
                (lo, hi)
            }
            LayerSpec::FullyConnected { weight_scale, .. } => {
                let n = input.len();
                let (lo, hi) = (0..out.channels)
                    .map(|o| {
                        self.weighted(
                            layer.weights[o * n..(o + 1) * n]
                                .iter()
                                .enumerate()
                                .map(|(i, &w)| (i, w)),
                        )
                    })
                    .unzip();
                self.scale *= weight_scale;
                (lo, hi)
            }
            LayerSpec::Square => {
                let (lo, hi) = self
                    .lo
                    .iter()
                    .zip(&self.hi)
                    .map(|(l, h)| {
                        let (l2, h2) = (l * l, h * h);
                        if l.is_negative() && h.is_positive() {
                            (BigInt::zero(), l2.max(h2))
                        } else {
                            (l2.clone().min(h2.clone()), l2.max(h2))
                        }
                    })
                    .unzip();
                self.scale = &self.scale * &self.scale;
                (lo, hi)
            }
            LayerSpec::AvgPool { extent, stride } => {
                let mut lo = Vec::with_capacity(out.len());
                let mut hi = Vec::with_capacity(out.len());
                for oy in 0..out.height {
                    for ox in 0..out.width {
                        for c in 0..out.channels {
                            let taps = pool_taps(extent, stride, input, oy, ox, c);
                            lo.push(taps.iter().map(|&i| &self.lo[i]).sum());
                            hi.push(taps.iter().map(|&i| &self.hi[i]).sum());
                        }
                    }
                }
                self.scale *= (extent * extent) as u64;
                (lo, hi)
            }
        };
        self.lo = lo;
        self.hi = hi;
        if let Some(bias) = &layer.bias {
            let units = out.channels;
            for (i, (l, h)) in self.lo.iter_mut().zip(self.hi.iter_mut()).enumerate() {
                *l += bias[i % units];
                *h += bias[i % units];
            }
        }
        self.shape = out;
        self.layers_done += 1;
        let name = format!("layer {} ({})", self.layers_done, layer.spec.name());
        self.check(&name)
    }

    fn weighted(&self, taps: impl Iterator<Item = (usize, i64)>) -> (BigInt, BigInt) {
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (i, w) in taps {
            if w > 0 {
                lo += &self.lo[i] * w;
                hi += &self.hi[i] * w;
            } else if w < 0 {
                lo += &self.hi[i] * w;
                hi += &self.lo[i] * w;
            }
        }
        (lo, hi)
    }
}

/// `log2` of a big integer (`-inf` for zero).
pub fn log2(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(53);
    let top: u64 = (v >> shift).try_into().unwrap();
    (top as f64).log2() + shift as f64
}
