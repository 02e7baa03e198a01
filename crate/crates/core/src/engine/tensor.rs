use std::sync::Arc;

use num_bigint::BigUint;
use rand::RngCore;

use crate::batching::SlotEncoder;
use crate::bfv::{decrypt, encrypt, BfvParams, Ciphertext, Plaintext, PublicKey, SecretKey};
use crate::codec::scalar::reduce_signed;
use crate::error::{Error, Result};
use crate::nn::{IntTensor, Shape};

/// How images map onto plaintexts.
#[derive(Clone, Debug)]
pub enum PackingLayout {
    /// Slot `j` of every ciphertext belongs to image `j`.
    Slots {
        encoder: Arc<SlotEncoder>,
        batch: usize,
    },
    /// A single image per ciphertext, carried in the constant coefficient.
    /// Used when `t` does not admit batching.
    Scalar { degree: usize, t: u64 },
}

impl PackingLayout {
    /// Slot layout when `t` supports it, otherwise the scalar layout
    /// (which requires `batch == 1`).
    pub fn for_params(params: &BfvParams, batch: usize) -> Result<Self> {
        if params.supports_batching() {
            Self::slots(params, batch)
        } else if batch == 1 {
            Ok(PackingLayout::Scalar {
                degree: params.degree(),
                t: params.plain_modulus(),
            })
        } else {
            Err(Error::Capacity(format!(
                "t = {} does not support batching; only one image per evaluation",
                params.plain_modulus()
            )))
        }
    }

    pub fn slots(params: &BfvParams, batch: usize) -> Result<Self> {
        let encoder = SlotEncoder::new(params.degree(), params.plain_modulus())?;
        if batch == 0 || batch > params.degree() {
            return Err(Error::Capacity(format!(
                "batch of {batch} images does not fit {} slots",
                params.degree()
            )));
        }
        Ok(PackingLayout::Slots {
            encoder: Arc::new(encoder),
            batch,
        })
    }

    pub fn batch(&self) -> usize {
        match self {
            PackingLayout::Slots { batch, .. } => *batch,
            PackingLayout::Scalar { .. } => 1,
        }
    }

    pub fn plain_modulus(&self) -> u64 {
        match self {
            PackingLayout::Slots { encoder, .. } => encoder.plain_modulus(),
            PackingLayout::Scalar { t, .. } => *t,
        }
    }

    /// Encodes one value per image (reduced mod `t`); unused slots are 0.
    pub fn encode(&self, values: &[i64]) -> Result<Plaintext> {
        if values.len() > self.batch() {
            return Err(Error::Capacity(format!(
                "{} values exceed the batch of {}",
                values.len(),
                self.batch()
            )));
        }
        match self {
            PackingLayout::Slots { encoder, .. } => encoder.encode_signed(values),
            PackingLayout::Scalar { degree, t } => Ok(Plaintext::constant(
                values.first().map_or(0, |&v| reduce_signed(&v.into(), *t)),
                *degree,
                *t,
            )),
        }
    }

    /// Per-image residues in `[0, t)`.
    pub fn decode(&self, pt: &Plaintext) -> Result<Vec<u64>> {
        match self {
            PackingLayout::Slots { encoder, batch } => {
                let mut v = encoder.decode_slots(pt)?;
                v.truncate(*batch);
                Ok(v)
            }
            PackingLayout::Scalar { .. } => Ok(vec![pt.coeffs()[0]]),
        }
    }
}

/// A feature map held as one ciphertext per position.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherTensor {
    pub shape: Shape,
    pub cts: Vec<Ciphertext>,
    pub scale: BigUint,
    /// Index of the plaintext-CRT channel this tensor belongs to.
    pub channel: usize,
}

impl CipherTensor {
    pub fn new(shape: Shape, cts: Vec<Ciphertext>, scale: BigUint, channel: usize) -> Result<Self> {
        if cts.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} ciphertexts for a {}x{}x{} map",
                cts.len(),
                shape.height,
                shape.width,
                shape.channels
            )));
        }
        if let Some(first) = cts.first() {
            for c in &cts[1..] {
                if c.params() != first.params() {
                    return Err(Error::mismatch(
                        "ciphertexts in a tensor must share parameters",
                    ));
                }
            }
        }
        Ok(CipherTensor {
            shape,
            cts,
            scale,
            channel,
        })
    }

    pub fn params(&self) -> Option<&Arc<BfvParams>> {
        self.cts.first().map(|c| c.params())
    }

    pub fn len(&self) -> usize {
        self.cts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cts.is_empty()
    }
}

/// Encrypts a batch: ciphertext `i` holds pixel `i` of every image.
pub fn pack_images<R: RngCore + ?Sized>(
    images: &[IntTensor],
    layout: &PackingLayout,
    pk: &PublicKey,
    channel: usize,
    rng: &mut R,
) -> Result<CipherTensor> {
    if images.is_empty() {
        return Err(Error::Shape("no images to pack".into()));
    }
    if images.len() > layout.batch() {
        return Err(Error::Capacity(format!(
            "{} images exceed the batch capacity {}",
            images.len(),
            layout.batch()
        )));
    }
    if layout.plain_modulus() != pk.params().plain_modulus() {
        return Err(Error::mismatch(
            "layout and key use different plaintext moduli",
        ));
    }
    let shape = images[0].shape();
    let scale = images[0].scale().clone();
    if images
        .iter()
        .any(|im| im.shape() != shape || *im.scale() != scale)
    {
        return Err(Error::Shape(
            "images in a batch must share shape and scale".into(),
        ));
    }
    let t = layout.plain_modulus();
    let mut cts = Vec::with_capacity(shape.len());
    let mut values = vec![0i64; images.len()];
    for i in 0..shape.len() {
        for (v, im) in values.iter_mut().zip(images) {
            *v = reduce_signed(&im.data()[i], t) as i64;
        }
        let pt = layout.encode(&values)?;
        cts.push(encrypt(pk, &pt, rng)?);
    }
    CipherTensor::new(shape, cts, scale, channel)
}

/// Decrypts every position; returns `[position][image]` residues mod `t`.
pub fn unpack(ct: &CipherTensor, layout: &PackingLayout, sk: &SecretKey) -> Result<Vec<Vec<u64>>> {
    ct.cts
        .iter()
        .map(|c| layout.decode(&decrypt(sk, c)?))
        .collect()
}
