use std::sync::Arc;

use rand::RngCore;

use super::params::BfvParams;
use crate::error::{Error, Result};
use crate::ring::{sample_binary, sample_noise, sample_uniform, Domain, RingElem};

/// Binary secret `s ∈ R_2`.
#[derive(Clone, Debug)]
pub struct SecretKey {
    params: Arc<BfvParams>,
    s: RingElem,
    s_ntt: RingElem,
}

/// `pk = (b, a)` with `b = e − a·s`. Both parts are held in NTT form.
#[derive(Clone, Debug)]
pub struct PublicKey {
    params: Arc<BfvParams>,
    b: RingElem,
    a: RingElem,
}

/// Relinearization key: `l + 1` pairs `(w^i s² − (a_i s + e_i), a_i)`, NTT form.
#[derive(Clone, Debug)]
pub struct RelinKey {
    params: Arc<BfvParams>,
    k0: Vec<RingElem>,
    k1: Vec<RingElem>,
}

fn to_ntt(mut e: RingElem) -> RingElem {
    e.to_domain(Domain::Ntt);
    e
}

fn to_coeff(e: &RingElem) -> RingElem {
    let mut e = e.clone();
    e.to_domain(Domain::Coefficient);
    e
}

fn check_ctx(params: &BfvParams, e: &RingElem) -> Result<()> {
    if **e.context() != **params.ring() {
        return Err(Error::mismatch("key polynomial has the wrong ring"));
    }
    Ok(())
}

/// Generates a fresh key triple.
pub fn keygen<R: RngCore + ?Sized>(
    params: &Arc<BfvParams>,
    rng: &mut R,
) -> (SecretKey, PublicKey, RelinKey) {
    let sk = SecretKey::generate(params, rng);
    let pk = PublicKey::generate(&sk, rng);
    let rlk = RelinKey::generate(&sk, rng);
    (sk, pk, rlk)
}

impl SecretKey {
    pub fn generate<R: RngCore + ?Sized>(params: &Arc<BfvParams>, rng: &mut R) -> Self {
        let s = sample_binary(params.ring(), rng);
        Self::from_poly(params, s).expect("sampled in the right ring")
    }

    /// Wraps a coefficient-domain polynomial; every coefficient must be 0 or 1.
    pub fn from_poly(params: &Arc<BfvParams>, s: RingElem) -> Result<Self> {
        check_ctx(params, &s)?;
        let s = to_coeff(&s);
        let n = params.degree();
        let k = params.ring().len();
        for j in 0..n {
            let first = s.residues()[j];
            if first > 1 || (1..k).any(|i| s.residues()[i * n + j] != first) {
                return Err(Error::Key("secret key must be binary".into()));
            }
        }
        Ok(SecretKey {
            params: params.clone(),
            s_ntt: to_ntt(s.clone()),
            s,
        })
    }

    pub fn params(&self) -> &Arc<BfvParams> {
        &self.params
    }

    pub fn poly(&self) -> &RingElem {
        &self.s
    }

    pub(crate) fn poly_ntt(&self) -> &RingElem {
        &self.s_ntt
    }
}

impl PublicKey {
    pub fn generate<R: RngCore + ?Sized>(sk: &SecretKey, rng: &mut R) -> Self {
        let ctx = sk.params.ring();
        let a = to_ntt(sample_uniform(ctx, rng));
        let e = to_ntt(sample_noise(ctx, rng));
        let b = e.sub(&a.mul_pointwise(sk.poly_ntt()).unwrap()).unwrap();
        PublicKey {
            params: sk.params.clone(),
            b,
            a,
        }
    }

    pub fn from_parts(params: &Arc<BfvParams>, b: RingElem, a: RingElem) -> Result<Self> {
        check_ctx(params, &b)?;
        check_ctx(params, &a)?;
        Ok(PublicKey {
            params: params.clone(),
            b: to_ntt(b),
            a: to_ntt(a),
        })
    }

    pub fn params(&self) -> &Arc<BfvParams> {
        &self.params
    }

    /// `(b, a)` in coefficient form.
    pub fn parts(&self) -> (RingElem, RingElem) {
        (to_coeff(&self.b), to_coeff(&self.a))
    }

    pub(crate) fn b_ntt(&self) -> &RingElem {
        &self.b
    }

    pub(crate) fn a_ntt(&self) -> &RingElem {
        &self.a
    }
}

impl RelinKey {
    pub fn generate<R: RngCore + ?Sized>(sk: &SecretKey, rng: &mut R) -> Self {
        let params = &sk.params;
        let ctx = params.ring();
        let s2 = sk.s_ntt.mul_pointwise(&sk.s_ntt).unwrap();
        let mut k0 = Vec::with_capacity(params.relin_len());
        let mut k1 = Vec::with_capacity(params.relin_len());
        for i in 0..params.relin_len() {
            let a = to_ntt(sample_uniform(ctx, rng));
            let e = to_ntt(sample_noise(ctx, rng));
            // w^i mod each prime
            let shift = params.relin_bits() as u64 * i as u64;
            let wi: Vec<u64> = ctx.moduli().iter().map(|m| m.pow(2, shift)).collect();
            let mut c0 = s2.clone();
            c0.mul_rns_scalar_assign(&wi);
            c0.sub_assign(&a.mul_pointwise(&sk.s_ntt).unwrap()).unwrap();
            c0.sub_assign(&e).unwrap();
            k0.push(c0);
            k1.push(a);
        }
        RelinKey {
            params: params.clone(),
            k0,
            k1,
        }
    }

    pub fn from_parts(params: &Arc<BfvParams>, parts: Vec<(RingElem, RingElem)>) -> Result<Self> {
        if parts.len() != params.relin_len() {
            return Err(Error::mismatch(format!(
                "relinearization key has {} components, expected {}",
                parts.len(),
                params.relin_len()
            )));
        }
        let mut k0 = Vec::with_capacity(parts.len());
        let mut k1 = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            check_ctx(params, &a)?;
            check_ctx(params, &b)?;
            k0.push(to_ntt(a));
            k1.push(to_ntt(b));
        }
        Ok(RelinKey {
            params: params.clone(),
            k0,
            k1,
        })
    }

    pub fn params(&self) -> &Arc<BfvParams> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.k0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k0.is_empty()
    }

    /// Component `i` in coefficient form.
    pub fn component(&self, i: usize) -> (RingElem, RingElem) {
        (to_coeff(&self.k0[i]), to_coeff(&self.k1[i]))
    }

    pub(crate) fn ntt_parts(&self) -> (&[RingElem], &[RingElem]) {
        (&self.k0, &self.k1)
    }
}
