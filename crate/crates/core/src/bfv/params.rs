use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::modulus::{ntt_primes, MAX_MODULUS_BITS};
use crate::ring::rns::reduce_limbs;
use crate::ring::{Modulus, RnsContext};

/// Default relinearization base `w = 2^16`.
pub const DEFAULT_RELIN_BITS: u32 = 16;

// Extra bits of headroom in the auxiliary basis beyond t * N * q.
const AUX_MARGIN_BITS: u64 = 4;
const AUX_PRIME_BITS: u32 = 61;

/// Parameters of one BFV instance (a single plaintext modulus `t`).
///
/// Holds the ciphertext ring `R_q`, an auxiliary prime basis `P` used for
/// exact tensoring, and every constant the scale-and-round steps need.
pub struct BfvParams {
    ring: Arc<RnsContext>,
    aux: Arc<RnsContext>,
    t: Modulus,
    relin_bits: u32,
    relin_len: usize,
    depth: u32,
    security: u32,
    delta: BigUint,
    fingerprint: [u8; 32],
    pub(crate) c: ScaleConstants,
}

/// Per-prime constants for decryption and the `t/q` scaling step.
pub(crate) struct ScaleConstants {
    pub delta_q: Vec<u64>,
    pub t_q: Vec<u64>,
    pub half_q_q: Vec<u64>,
    pub t_p: Vec<u64>,
    pub half_q_p: Vec<u64>,
    pub q_inv_p: Vec<u64>,
    pub half_q_t: u64,
    pub q_inv_t: u64,
}

impl fmt::Debug for BfvParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BfvParams")
            .field("degree", &self.degree())
            .field("q_primes", &self.ring.primes())
            .field("t", &self.t.value())
            .field("relin_bits", &self.relin_bits)
            .field("depth", &self.depth)
            .finish()
    }
}

impl PartialEq for BfvParams {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
    }
}

impl Eq for BfvParams {}

impl BfvParams {
    pub fn new(degree: usize, q_primes: &[u64], t: u64, relin_bits: u32) -> Result<Arc<Self>> {
        Self::with_metadata(degree, q_primes, t, relin_bits, 0, 0)
    }

    /// Builds parameters carrying the declared depth `L` and security `λ`
    /// (both informational).
    pub fn with_metadata(
        degree: usize,
        q_primes: &[u64],
        t: u64,
        relin_bits: u32,
        depth: u32,
        security: u32,
    ) -> Result<Arc<Self>> {
        let ring = Arc::new(RnsContext::new(degree, q_primes)?);
        if !(2..1u64 << MAX_MODULUS_BITS).contains(&t) {
            return Err(Error::UnsupportedParameters(format!(
                "plaintext modulus {t} must lie in [2, 2^62)"
            )));
        }
        let q = ring.product().clone();
        if BigUint::from(t) >= q {
            return Err(Error::UnsupportedParameters(
                "plaintext modulus must be below q".into(),
            ));
        }
        if q_primes.iter().any(|&p| num_integer::gcd(p, t) != 1) {
            return Err(Error::UnsupportedParameters(format!(
                "plaintext modulus {t} shares a factor with q"
            )));
        }
        if !(1..=32).contains(&relin_bits) {
            return Err(Error::UnsupportedParameters(format!(
                "relinearization base 2^{relin_bits} out of range"
            )));
        }
        let q_bits = ring.product_bits();
        let relin_len = ((q_bits - 1) / relin_bits as u64) as usize + 1;

        // P > 2 * t * N * q / 2 keeps the scaled tensor inside the centered range of P
        let need = q_bits + 64 - t.leading_zeros() as u64
            + degree.trailing_zeros() as u64
            + AUX_MARGIN_BITS;
        let aux_count = need.div_ceil(AUX_PRIME_BITS as u64 - 1) as usize;
        let aux_primes = ntt_primes(AUX_PRIME_BITS, degree, aux_count, q_primes);
        if aux_primes.len() != aux_count {
            return Err(Error::UnsupportedParameters(
                "not enough auxiliary primes".into(),
            ));
        }
        let aux = Arc::new(RnsContext::new(degree, &aux_primes)?);

        let t_mod = Modulus::new(t);
        let delta = &q / t;
        let half_q = &q >> 1u32;
        let limbs_of = |v: &BigUint| v.to_u64_digits();
        let red = |v: &BigUint, m: &Modulus| reduce_limbs(&limbs_of(v), m);
        let q_inv = |m: &Modulus| m.inv(red(&q, m)).expect("q coprime to modulus");
        let c = ScaleConstants {
            delta_q: ring.moduli().iter().map(|m| red(&delta, m)).collect(),
            t_q: ring.moduli().iter().map(|m| m.reduce(t)).collect(),
            half_q_q: ring.moduli().iter().map(|m| red(&half_q, m)).collect(),
            t_p: aux.moduli().iter().map(|m| m.reduce(t)).collect(),
            half_q_p: aux.moduli().iter().map(|m| red(&half_q, m)).collect(),
            q_inv_p: aux.moduli().iter().map(q_inv).collect(),
            half_q_t: red(&half_q, &t_mod),
            q_inv_t: q_inv(&t_mod),
        };

        let mut h = Sha256::new();
        h.update(b"hefir-bfv");
        h.update((degree as u64).to_le_bytes());
        for p in q_primes {
            h.update(p.to_le_bytes());
        }
        h.update(t.to_le_bytes());
        h.update(relin_bits.to_le_bytes());
        let fingerprint: [u8; 32] = h.finalize().into();

        Ok(Arc::new(BfvParams {
            ring,
            aux,
            t: t_mod,
            relin_bits,
            relin_len,
            depth,
            security,
            delta,
            fingerprint,
            c,
        }))
    }

    pub fn degree(&self) -> usize {
        self.ring.degree()
    }

    pub fn ring(&self) -> &Arc<RnsContext> {
        &self.ring
    }

    pub fn aux(&self) -> &Arc<RnsContext> {
        &self.aux
    }

    pub fn plain_modulus(&self) -> u64 {
        self.t.value()
    }

    pub(crate) fn t(&self) -> &Modulus {
        &self.t
    }

    pub fn q(&self) -> &BigUint {
        self.ring.product()
    }

    pub fn log2_q(&self) -> f64 {
        let bits = self.ring.product_bits();
        let shift = bits.saturating_sub(52);
        (self.q() >> shift).to_f64().unwrap().log2() + shift as f64
    }

    /// `⌊q/t⌋`.
    pub fn delta(&self) -> &BigUint {
        &self.delta
    }

    pub fn relin_bits(&self) -> u32 {
        self.relin_bits
    }

    /// Number of relinearization key components, `l + 1`.
    pub fn relin_len(&self) -> usize {
        self.relin_len
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn security(&self) -> u32 {
        self.security
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    /// Whether `t` is a prime with `t ≡ 1 (mod 2N)`, i.e. supports batching.
    pub fn supports_batching(&self) -> bool {
        let t = self.t.value();
        crate::ring::modulus::is_prime(t) && t % (2 * self.degree() as u64) == 1
    }

    pub(crate) fn check_same(&self, other: &BfvParams) -> Result<()> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::mismatch(format!(
                "objects use different parameters (N={} t={} vs N={} t={})",
                self.degree(),
                self.plain_modulus(),
                other.degree(),
                other.plain_modulus()
            )));
        }
        Ok(())
    }
}
