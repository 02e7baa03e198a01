use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use super::spec::Shape;
use crate::error::{Error, Result};

/// Integer feature map with exact multiprecision entries and its scale `Δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntTensor {
    shape: Shape,
    data: Vec<BigInt>,
    scale: BigUint,
}

impl IntTensor {
    pub fn new(shape: Shape, data: Vec<BigInt>, scale: BigUint) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Shape(format!(
                "tensor of shape {}x{}x{} needs {} entries, got {}",
                shape.height,
                shape.width,
                shape.channels,
                shape.len(),
                data.len()
            )));
        }
        Ok(IntTensor { shape, data, scale })
    }

    pub fn zeros(shape: Shape, scale: BigUint) -> Self {
        IntTensor {
            shape,
            data: vec![BigInt::zero(); shape.len()],
            scale,
        }
    }

    pub fn from_i64(shape: Shape, data: &[i64], scale: u64) -> Result<Self> {
        Self::new(
            shape,
            data.iter().map(|&v| BigInt::from(v)).collect(),
            BigUint::from(scale),
        )
    }

    /// Integerizes 8-bit pixels: `round(p/255 · scale)`, half away from zero.
    pub fn from_pixels(shape: Shape, pixels: &[u8], scale: u64) -> Result<Self> {
        let data: Vec<i64> = pixels
            .iter()
            .map(|&p| (2 * p as u64 * scale + 255) / 510)
            .map(|v| v as i64)
            .collect();
        Self::from_i64(shape, &data, scale)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[BigInt] {
        &self.data
    }

    pub fn into_data(self) -> Vec<BigInt> {
        self.data
    }

    pub fn scale(&self) -> &BigUint {
        &self.scale
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> &BigInt {
        &self.data[self.shape.index(y, x, c)]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> BigUint {
        self.data
            .iter()
            .map(|v| v.abs().to_biguint().unwrap())
            .max()
            .unwrap_or_default()
    }

    /// Entries as `i64`, if they all fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.data.iter().map(|v| i64::try_from(v).ok()).collect()
    }

    /// Entries reduced into `[0, m)`.
    pub fn reduce_mod(&self, m: &BigUint) -> Vec<BigUint> {
        let mi = BigInt::from(m.clone());
        self.data
            .iter()
            .map(|v| {
                let r = ((v % &mi) + &mi) % &mi;
                r.to_biguint().unwrap()
            })
            .collect()
    }

    pub(crate) fn with_scale(shape: Shape, data: Vec<BigInt>, scale: BigUint) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        IntTensor { shape, data, scale }
    }
}
