use std::sync::Arc;

use rand::RngCore;

use super::keys::{PublicKey, RelinKey, SecretKey};
use super::params::BfvParams;
use super::scale::{decompose, extend_to_aux, scale_round};
use crate::error::{Error, Result};
use crate::ring::{sample_binary, sample_noise, Domain, RingElem};

/// A message polynomial in `R_t`, coefficients in `[0, t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaintext {
    coeffs: Vec<u64>,
    t: u64,
}

impl Plaintext {
    pub fn new(coeffs: Vec<u64>, t: u64) -> Result<Self> {
        if let Some(&c) = coeffs.iter().find(|&&c| c >= t) {
            return Err(Error::Encoding(format!(
                "plaintext coefficient {c} is not below t = {t}"
            )));
        }
        Ok(Plaintext { coeffs, t })
    }

    pub fn zero(n: usize, t: u64) -> Self {
        Plaintext {
            coeffs: vec![0; n],
            t,
        }
    }

    /// The constant polynomial `c mod t`.
    pub fn constant(c: u64, n: usize, t: u64) -> Self {
        let mut coeffs = vec![0; n];
        coeffs[0] = c % t;
        Plaintext { coeffs, t }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn modulus(&self) -> u64 {
        self.t
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `Some(c)` when the plaintext is the constant polynomial `c`.
    pub fn as_constant(&self) -> Option<u64> {
        if self.coeffs[1..].iter().all(|&c| c == 0) {
            Some(self.coeffs[0])
        } else {
            None
        }
    }

    fn centered(&self) -> Vec<i64> {
        let half = self.t / 2;
        self.coeffs
            .iter()
            .map(|&c| {
                if c > half {
                    c as i64 - self.t as i64
                } else {
                    c as i64
                }
            })
            .collect()
    }
}

/// A BFV ciphertext with two or three parts, held in coefficient form.
#[derive(Clone, Debug)]
pub struct Ciphertext {
    params: Arc<BfvParams>,
    parts: Vec<RingElem>,
    fresh: bool,
}

impl PartialEq for Ciphertext {
    fn eq(&self, other: &Self) -> bool {
        *self.params == *other.params && self.parts == other.parts
    }
}

impl Ciphertext {
    pub fn from_parts(params: &Arc<BfvParams>, parts: Vec<RingElem>) -> Result<Self> {
        if !(2..=3).contains(&parts.len()) {
            return Err(Error::mismatch(format!(
                "ciphertext must have 2 or 3 parts, got {}",
                parts.len()
            )));
        }
        let mut parts = parts;
        for p in &mut parts {
            if **p.context() != **params.ring() {
                return Err(Error::mismatch("ciphertext part has the wrong ring"));
            }
            p.to_domain(Domain::Coefficient);
        }
        Ok(Ciphertext {
            params: params.clone(),
            parts,
            fresh: false,
        })
    }

    /// Transparent encryption of zero (all parts zero).
    pub fn zero(params: &Arc<BfvParams>) -> Self {
        let z = RingElem::zero(params.ring(), Domain::Coefficient);
        Ciphertext {
            params: params.clone(),
            parts: vec![z.clone(), z],
            fresh: false,
        }
    }

    pub fn params(&self) -> &Arc<BfvParams> {
        &self.params
    }

    pub fn parts(&self) -> &[RingElem] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// True for a ciphertext straight out of [`encrypt`].
    pub fn is_fresh(&self) -> bool {
        self.fresh
    }

    /// `self += w · other` for a signed scalar `w`; a fused
    /// plaintext-multiply-and-add used by the network evaluator.
    pub fn add_scaled_assign(&mut self, other: &Ciphertext, w: i64) -> Result<()> {
        self.params.check_same(&other.params)?;
        if other.parts.len() > self.parts.len() {
            self.parts.resize(
                other.parts.len(),
                RingElem::zero(self.params.ring(), Domain::Coefficient),
            );
        }
        let ring = self.params.ring();
        let n = ring.degree();
        for (dst, src) in self.parts.iter_mut().zip(&other.parts) {
            for (i, m) in ring.moduli().iter().enumerate() {
                let wm = m.reduce_i64(w);
                let ws = m.shoup(wm);
                let d = &mut dst.residues_mut()[i * n..(i + 1) * n];
                let s = &src.residues()[i * n..(i + 1) * n];
                for (a, &b) in d.iter_mut().zip(s) {
                    *a = m.add(*a, m.mul_shoup(b, wm, ws));
                }
            }
        }
        self.fresh = false;
        Ok(())
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Ciphertext) -> Result<()> {
        self.params.check_same(&other.params)?;
        if other.parts.len() > self.parts.len() {
            self.parts.resize(
                other.parts.len(),
                RingElem::zero(self.params.ring(), Domain::Coefficient),
            );
        }
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            a.add_assign(b)?;
        }
        self.fresh = false;
        Ok(())
    }
}

fn check_plain(params: &BfvParams, pt: &Plaintext) -> Result<()> {
    if pt.t != params.plain_modulus() || pt.coeffs.len() != params.degree() {
        return Err(Error::mismatch(format!(
            "plaintext (N={}, t={}) does not match parameters (N={}, t={})",
            pt.coeffs.len(),
            pt.t,
            params.degree(),
            params.plain_modulus()
        )));
    }
    Ok(())
}

/// `Δ·m` over `Q`, coefficient domain.
fn scaled_message(params: &BfvParams, pt: &Plaintext) -> RingElem {
    let mut m = RingElem::from_unsigned(params.ring(), &pt.coeffs);
    m.mul_rns_scalar_assign(&params.c.delta_q);
    m
}

/// `c0 = b·u + e1 + Δm`, `c1 = a·u + e2` with binary `u`.
pub fn encrypt<R: RngCore + ?Sized>(
    pk: &PublicKey,
    pt: &Plaintext,
    rng: &mut R,
) -> Result<Ciphertext> {
    let params = pk.params();
    if pt.coeffs.iter().any(|&c| c >= pt.t) {
        return Err(Error::Encoding("plaintext coefficient not below t".into()));
    }
    check_plain(params, pt)?;
    let ctx = params.ring();
    let mut u = sample_binary(ctx, rng);
    u.to_domain(Domain::Ntt);
    let mut c0 = pk.b_ntt().mul_pointwise(&u)?;
    let mut c1 = pk.a_ntt().mul_pointwise(&u)?;
    c0.to_domain(Domain::Coefficient);
    c1.to_domain(Domain::Coefficient);
    c0.add_assign(&sample_noise(ctx, rng))?;
    c1.add_assign(&sample_noise(ctx, rng))?;
    c0.add_assign(&scaled_message(params, pt))?;
    Ok(Ciphertext {
        params: params.clone(),
        parts: vec![c0, c1],
        fresh: true,
    })
}

/// `c0 + c1·s (+ c2·s²)` over `Q`, coefficient domain.
fn phase(sk: &SecretKey, c: &Ciphertext) -> Result<RingElem> {
    sk.params().check_same(c.params())?;
    let s = sk.poly_ntt();
    let mut acc = RingElem::zero(c.params.ring(), Domain::Ntt);
    let mut s_pow = s.clone();
    for (i, part) in c.parts.iter().enumerate().skip(1) {
        if i > 1 {
            s_pow = s_pow.mul_pointwise(s)?;
        }
        let p = part.ntt_forward()?;
        acc.mul_acc_pointwise(&p, &s_pow)?;
    }
    acc.to_domain(Domain::Coefficient);
    acc.add_assign(&c.parts[0])?;
    Ok(acc)
}

/// `round(t·v/q) mod t` for every coefficient of the phase `v`.
fn round_phase(params: &BfvParams, v: &RingElem) -> Vec<u64> {
    let ring = params.ring();
    let n = ring.degree();
    let composer = ring.composer();
    let c = &params.c;
    let t = params.t();
    let mut w = vec![0u64; ring.len()];
    let mut rho = vec![0u64; composer.limbs()];
    let data = v.residues();
    (0..n)
        .map(|j| {
            for (i, m) in ring.moduli().iter().enumerate() {
                w[i] = m.add(m.mul(data[i * n + j], c.t_q[i]), c.half_q_q[i]);
            }
            composer.compose(&w, &mut rho);
            let r = crate::ring::rns::reduce_limbs(&rho, t);
            t.mul(t.sub(c.half_q_t, r), c.q_inv_t)
        })
        .collect()
}

pub fn decrypt(sk: &SecretKey, c: &Ciphertext) -> Result<Plaintext> {
    let params = sk.params();
    let v = phase(sk, c)?;
    Ok(Plaintext {
        coeffs: round_phase(params, &v),
        t: params.plain_modulus(),
    })
}

/// Remaining noise budget in bits, clamped at zero.
pub fn noise_budget(sk: &SecretKey, c: &Ciphertext) -> Result<u32> {
    let params = sk.params();
    let log_noise = noise_log2(sk, c)?;
    let budget =
        params.log2_q() - (params.plain_modulus() as f64).log2() - log_noise.max(0.0) - 1.0;
    Ok(budget.floor().max(0.0) as u32)
}

/// `log2 ‖v − Δ·m‖∞` where `m` is the decrypted message (0 when exact).
pub fn noise_log2(sk: &SecretKey, c: &Ciphertext) -> Result<f64> {
    let params = sk.params();
    let v = phase(sk, c)?;
    let m = Plaintext {
        coeffs: round_phase(params, &v),
        t: params.plain_modulus(),
    };
    let e = v.sub(&scaled_message(params, &m))?;
    Ok(e.inf_norm_log2()?.unwrap_or(0.0))
}

fn zip_parts(
    a: &Ciphertext,
    b: &Ciphertext,
    f: impl Fn(&RingElem, &RingElem) -> Result<RingElem>,
) -> Result<Ciphertext> {
    a.params.check_same(&b.params)?;
    let len = a.parts.len().max(b.parts.len());
    let zero = RingElem::zero(a.params.ring(), Domain::Coefficient);
    let parts = (0..len)
        .map(|i| {
            f(
                a.parts.get(i).unwrap_or(&zero),
                b.parts.get(i).unwrap_or(&zero),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ciphertext {
        params: a.params.clone(),
        parts,
        fresh: false,
    })
}

pub fn hadd(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    zip_parts(a, b, |x, y| x.add(y))
}

pub fn hsub(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    zip_parts(a, b, |x, y| x.sub(y))
}

pub fn hadd_plain(c: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    check_plain(&c.params, pt)?;
    let mut out = c.clone();
    out.parts[0].add_assign(&scaled_message(&c.params, pt))?;
    out.fresh = false;
    Ok(out)
}

/// Multiplies by a signed integer constant.
pub fn hmult_scalar(c: &Ciphertext, w: i64) -> Ciphertext {
    Ciphertext {
        params: c.params.clone(),
        parts: c.parts.iter().map(|p| p.mul_scalar_i64(w)).collect(),
        fresh: false,
    }
}

/// Ciphertext-plaintext product. The plaintext is lifted centered so the
/// noise grows with `|m|` rather than with `t`.
pub fn hmult_plain(c: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
    check_plain(&c.params, pt)?;
    let centered = pt.centered();
    if pt.as_constant().is_some() {
        return Ok(hmult_scalar(c, centered[0]));
    }
    let mut w = RingElem::from_signed(c.params.ring(), &centered);
    w.to_domain(Domain::Ntt);
    let parts = c
        .parts
        .iter()
        .map(|p| {
            let mut x = p.ntt_forward()?;
            x = x.mul_pointwise(&w)?;
            x.to_domain(Domain::Coefficient);
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ciphertext {
        params: c.params.clone(),
        parts,
        fresh: false,
    })
}

fn require_two(c: &Ciphertext) -> Result<()> {
    if c.parts.len() != 2 {
        return Err(Error::mismatch(
            "multiplication expects 2-part ciphertexts; relinearize first",
        ));
    }
    Ok(())
}

/// Both bases of one input polynomial, NTT form.
struct Lifted {
    q: RingElem,
    p: RingElem,
}

fn lift(params: &BfvParams, e: &RingElem) -> Lifted {
    let mut p = extend_to_aux(params, e);
    p.to_domain(Domain::Ntt);
    let mut q = e.clone();
    q.to_domain(Domain::Ntt);
    Lifted { q, p }
}

fn finish(params: &BfvParams, mut zq: RingElem, mut zp: RingElem) -> RingElem {
    zq.to_domain(Domain::Coefficient);
    zp.to_domain(Domain::Coefficient);
    scale_round(params, &zq, &zp)
}

/// Tensor product scaled by `t/q`; returns a 3-part ciphertext.
pub fn hmult_no_relin(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    a.params.check_same(&b.params)?;
    require_two(a)?;
    require_two(b)?;
    let params = &a.params;
    let a0 = lift(params, &a.parts[0]);
    let a1 = lift(params, &a.parts[1]);
    let b0 = lift(params, &b.parts[0]);
    let b1 = lift(params, &b.parts[1]);
    let d0 = finish(
        params,
        a0.q.mul_pointwise(&b0.q)?,
        a0.p.mul_pointwise(&b0.p)?,
    );
    let mut d1q = a0.q.mul_pointwise(&b1.q)?;
    d1q.mul_acc_pointwise(&a1.q, &b0.q)?;
    let mut d1p = a0.p.mul_pointwise(&b1.p)?;
    d1p.mul_acc_pointwise(&a1.p, &b0.p)?;
    let d1 = finish(params, d1q, d1p);
    let d2 = finish(
        params,
        a1.q.mul_pointwise(&b1.q)?,
        a1.p.mul_pointwise(&b1.p)?,
    );
    Ok(Ciphertext {
        params: params.clone(),
        parts: vec![d0, d1, d2],
        fresh: false,
    })
}

/// Squaring tensor: only the two input polynomials are extended.
pub fn hsquare_no_relin(a: &Ciphertext) -> Result<Ciphertext> {
    require_two(a)?;
    let params = &a.params;
    let a0 = lift(params, &a.parts[0]);
    let a1 = lift(params, &a.parts[1]);
    let d0 = finish(
        params,
        a0.q.mul_pointwise(&a0.q)?,
        a0.p.mul_pointwise(&a0.p)?,
    );
    let mut d1q = a0.q.mul_pointwise(&a1.q)?;
    d1q.mul_scalar_assign(2);
    let mut d1p = a0.p.mul_pointwise(&a1.p)?;
    d1p.mul_scalar_assign(2);
    let d1 = finish(params, d1q, d1p);
    let d2 = finish(
        params,
        a1.q.mul_pointwise(&a1.q)?,
        a1.p.mul_pointwise(&a1.p)?,
    );
    Ok(Ciphertext {
        params: params.clone(),
        parts: vec![d0, d1, d2],
        fresh: false,
    })
}

/// Shrinks a 3-part ciphertext back to 2 parts by base-`w` key switching.
pub fn relinearize(c: &Ciphertext, rlk: &RelinKey) -> Result<Ciphertext> {
    c.params.check_same(rlk.params())?;
    if c.parts.len() == 2 {
        return Ok(c.clone());
    }
    let params = &c.params;
    let ring = params.ring();
    let n = ring.degree();
    let (k0, k1) = rlk.ntt_parts();
    let digits = decompose(params, &c.parts[2]);
    let mut acc0 = RingElem::zero(ring, Domain::Ntt);
    let mut acc1 = RingElem::zero(ring, Domain::Ntt);
    for (i, digit) in digits.iter().enumerate() {
        if digit.iter().all(|&x| x == 0) {
            continue;
        }
        // digits are below 2^32, hence below every prime
        let mut data = Vec::with_capacity(n * ring.len());
        for _ in 0..ring.len() {
            data.extend_from_slice(digit);
        }
        let mut dn = RingElem::from_residues(ring, data, Domain::Coefficient)?;
        dn.to_domain(Domain::Ntt);
        acc0.mul_acc_pointwise(&dn, &k0[i])?;
        acc1.mul_acc_pointwise(&dn, &k1[i])?;
    }
    acc0.to_domain(Domain::Coefficient);
    acc1.to_domain(Domain::Coefficient);
    acc0.add_assign(&c.parts[0])?;
    acc1.add_assign(&c.parts[1])?;
    Ok(Ciphertext {
        params: params.clone(),
        parts: vec![acc0, acc1],
        fresh: false,
    })
}

pub fn hmult(a: &Ciphertext, b: &Ciphertext, rlk: &RelinKey) -> Result<Ciphertext> {
    relinearize(&hmult_no_relin(a, b)?, rlk)
}

pub fn hsquare(a: &Ciphertext, rlk: &RelinKey) -> Result<Ciphertext> {
    relinearize(&hsquare_no_relin(a)?, rlk)
}
