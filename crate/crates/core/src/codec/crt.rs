//! Plaintext CRT over a composite modulus `T = ∏ t_i`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::scalar::from_modular_big;
use crate::error::{Error, Result};
use crate::ring::modulus::is_prime;
use crate::ring::Modulus;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrtSystem {
    moduli: Vec<u64>,
    product: BigUint,
    // T / t_i
    cofactors: Vec<BigUint>,
    // (T / t_i)^{-1} mod t_i
    inverses: Vec<u64>,
}

impl CrtSystem {
    pub fn new(moduli: &[u64]) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::UnsupportedParameters(
                "CRT system needs a modulus".into(),
            ));
        }
        for (i, &t) in moduli.iter().enumerate() {
            if !is_prime(t) || t >= 1 << 62 {
                return Err(Error::UnsupportedParameters(format!(
                    "plaintext modulus {t} must be a prime below 2^62"
                )));
            }
            if moduli[..i].contains(&t) {
                return Err(Error::UnsupportedParameters(format!(
                    "modulus {t} repeated"
                )));
            }
        }
        let product = moduli.iter().fold(BigUint::one(), |a, &t| a * t);
        let cofactors: Vec<BigUint> = moduli.iter().map(|&t| &product / t).collect();
        let inverses = moduli
            .iter()
            .zip(&cofactors)
            .map(|(&t, c)| {
                let m = Modulus::new(t);
                let r: u64 = (c % t).try_into().unwrap();
                m.inv(r).expect("distinct primes are coprime")
            })
            .collect();
        Ok(CrtSystem {
            moduli: moduli.to_vec(),
            product,
            cofactors,
            inverses,
        })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// `T`.
    pub fn product(&self) -> &BigUint {
        &self.product
    }

    /// Residues of `m mod T` per channel.
    pub fn icrt(&self, m: &BigUint) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&t| (m % t).try_into().unwrap())
            .collect()
    }

    /// Residues of a signed value (taken mod `T`).
    pub fn icrt_signed(&self, v: &BigInt) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|&t| super::scalar::reduce_signed(v, t))
            .collect()
    }

    /// `Σ r_i · ((T/t_i)^{-1} mod t_i) · (T/t_i) mod T`.
    pub fn reconstruct(&self, residues: &[u64]) -> Result<BigUint> {
        if residues.len() != self.moduli.len() {
            return Err(Error::IncompleteResult(format!(
                "expected {} residues, got {}",
                self.moduli.len(),
                residues.len()
            )));
        }
        let mut acc = BigUint::zero();
        for (i, &r) in residues.iter().enumerate() {
            let t = self.moduli[i];
            if r >= t {
                return Err(Error::mismatch(format!(
                    "residue {r} not below modulus {t}"
                )));
            }
            let y = Modulus::new(t).mul(r, self.inverses[i]);
            acc += &self.cofactors[i] * y;
        }
        Ok(acc % &self.product)
    }

    /// Reconstruction followed by the centered lift into `(−T/2, T/2]`.
    pub fn reconstruct_signed(&self, residues: &[u64]) -> Result<BigInt> {
        Ok(from_modular_big(
            &self.reconstruct(residues)?,
            &self.product,
        ))
    }
}
