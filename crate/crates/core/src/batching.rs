//! SIMD slot encoding: `R_t ≅ Z_t^N` when `t ≡ 1 (mod 2N)` is prime.
//!
//! Slot `i` holds the evaluation of the plaintext at `α_i = ζ^(2i+1)`.

use crate::bfv::Plaintext;
use crate::codec::scalar::reduce_signed;
use crate::error::{Error, Result};
use crate::ring::modulus::is_prime;
use crate::ring::ntt::{bit_reverse, NttTables};
use crate::ring::Modulus;

/// A length-`N` vector over `Z_t`.
pub type SlotVector = Vec<u64>;

#[derive(Clone, Debug)]
pub struct SlotEncoder {
    tables: NttTables,
    log_n: u32,
}

impl SlotEncoder {
    pub fn new(degree: usize, t: u64) -> Result<Self> {
        if !degree.is_power_of_two() || degree < 2 {
            return Err(Error::UnsupportedParameters(format!(
                "ring degree {degree} is not a power of two"
            )));
        }
        if !is_prime(t) || t % (2 * degree as u64) != 1 {
            return Err(Error::UnsupportedParameters(format!(
                "plaintext modulus {t} is not a prime congruent to 1 mod {}",
                2 * degree
            )));
        }
        let tables = NttTables::new(Modulus::new(t), degree).ok_or_else(|| {
            Error::UnsupportedParameters(format!("no primitive {}-th root mod {t}", 2 * degree))
        })?;
        Ok(SlotEncoder {
            tables,
            log_n: degree.trailing_zeros(),
        })
    }

    pub fn degree(&self) -> usize {
        self.tables.degree()
    }

    pub fn plain_modulus(&self) -> u64 {
        self.tables.modulus().value()
    }

    /// The primitive `2N`-th root `ζ`.
    pub fn root(&self) -> u64 {
        self.tables.psi()
    }

    /// `α_i = ζ^(2i+1)`.
    pub fn slot_point(&self, i: usize) -> u64 {
        self.tables.modulus().pow(self.root(), 2 * i as u64 + 1)
    }

    pub fn encode_slots(&self, v: &[u64]) -> Result<Plaintext> {
        let n = self.degree();
        let t = self.plain_modulus();
        if v.len() != n {
            return Err(Error::Encoding(format!(
                "expected {n} slots, got {}",
                v.len()
            )));
        }
        if let Some(&x) = v.iter().find(|&&x| x >= t) {
            return Err(Error::Encoding(format!(
                "slot value {x} is not below t = {t}"
            )));
        }
        let mut a = vec![0u64; n];
        for (i, &x) in v.iter().enumerate() {
            a[bit_reverse(i, self.log_n)] = x;
        }
        self.tables.inverse(&mut a);
        Plaintext::new(a, t)
    }

    /// Encodes signed values (reduced mod `t`); shorter inputs are zero-padded.
    pub fn encode_signed(&self, v: &[i64]) -> Result<Plaintext> {
        let t = self.plain_modulus();
        if v.len() > self.degree() {
            return Err(Error::Capacity(format!(
                "{} values exceed {} slots",
                v.len(),
                self.degree()
            )));
        }
        let mut slots: Vec<u64> = v.iter().map(|&x| reduce_signed(&x.into(), t)).collect();
        slots.resize(self.degree(), 0);
        self.encode_slots(&slots)
    }

    pub fn decode_slots(&self, pt: &Plaintext) -> Result<SlotVector> {
        let n = self.degree();
        if pt.degree() != n || pt.modulus() != self.plain_modulus() {
            return Err(Error::mismatch("plaintext does not match the encoder"));
        }
        let mut a = pt.coeffs().to_vec();
        self.tables.forward(&mut a);
        Ok((0..n).map(|i| a[bit_reverse(i, self.log_n)]).collect())
    }
}
