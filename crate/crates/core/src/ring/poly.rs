use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;

use super::rns::{limbs_to_biguint, RnsContext};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Coefficient,
    Ntt,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::Coefficient => "coefficient",
            Domain::Ntt => "NTT",
        }
    }
}

/// An element of `Z_q[X]/(X^N + 1)` stored as one residue array per prime
/// (prime-major, `data[i * N + j]`).
#[derive(Clone, Debug)]
pub struct RingElem {
    ctx: Arc<RnsContext>,
    data: Vec<u64>,
    domain: Domain,
}

impl PartialEq for RingElem {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && *self.ctx == *other.ctx && self.data == other.data
    }
}

impl Eq for RingElem {}

/// Coefficients of a ring element lifted to `[0, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigPoly {
    pub coefficients: Vec<BigUint>,
}

impl RingElem {
    pub fn zero(ctx: &Arc<RnsContext>, domain: Domain) -> Self {
        RingElem {
            ctx: ctx.clone(),
            data: vec![0; ctx.len() * ctx.degree()],
            domain,
        }
    }

    /// Wraps raw residues; fails if the length is wrong or any residue is
    /// out of range.
    pub fn from_residues(ctx: &Arc<RnsContext>, data: Vec<u64>, domain: Domain) -> Result<Self> {
        let n = ctx.degree();
        if data.len() != n * ctx.len() {
            return Err(Error::mismatch(format!(
                "expected {} residues, got {}",
                n * ctx.len(),
                data.len()
            )));
        }
        for (i, m) in ctx.moduli().iter().enumerate() {
            if data[i * n..(i + 1) * n].iter().any(|&r| r >= m.value()) {
                return Err(Error::mismatch(format!(
                    "residue out of range for prime {}",
                    m.value()
                )));
            }
        }
        Ok(RingElem {
            ctx: ctx.clone(),
            data,
            domain,
        })
    }

    /// Embeds small signed coefficients consistently in every residue channel.
    pub fn from_signed(ctx: &Arc<RnsContext>, coeffs: &[i64]) -> Self {
        let n = ctx.degree();
        assert_eq!(coeffs.len(), n);
        let mut data = vec![0u64; n * ctx.len()];
        for (i, m) in ctx.moduli().iter().enumerate() {
            for (dst, &c) in data[i * n..(i + 1) * n].iter_mut().zip(coeffs) {
                *dst = m.reduce_i64(c);
            }
        }
        RingElem {
            ctx: ctx.clone(),
            data,
            domain: Domain::Coefficient,
        }
    }

    pub fn from_unsigned(ctx: &Arc<RnsContext>, coeffs: &[u64]) -> Self {
        let n = ctx.degree();
        assert_eq!(coeffs.len(), n);
        let mut data = vec![0u64; n * ctx.len()];
        for (i, m) in ctx.moduli().iter().enumerate() {
            for (dst, &c) in data[i * n..(i + 1) * n].iter_mut().zip(coeffs) {
                *dst = m.reduce(c);
            }
        }
        RingElem {
            ctx: ctx.clone(),
            data,
            domain: Domain::Coefficient,
        }
    }

    pub fn context(&self) -> &Arc<RnsContext> {
        &self.ctx
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn degree(&self) -> usize {
        self.ctx.degree()
    }

    pub fn residues(&self) -> &[u64] {
        &self.data
    }

    pub fn residues_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    /// Residues belonging to the `i`-th prime.
    pub fn channel(&self, i: usize) -> &[u64] {
        let n = self.ctx.degree();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [u64] {
        let n = self.ctx.degree();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn into_residues(self) -> Vec<u64> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn check_compatible(&self, other: &RingElem) -> Result<()> {
        if !Arc::ptr_eq(&self.ctx, &other.ctx) && *self.ctx != *other.ctx {
            return Err(Error::mismatch(
                "ring elements belong to different contexts",
            ));
        }
        if self.domain != other.domain {
            return Err(Error::Domain {
                expected: self.domain.name(),
            });
        }
        Ok(())
    }

    pub fn ntt_forward(&self) -> Result<RingElem> {
        let mut out = self.clone();
        out.ntt_forward_in_place()?;
        Ok(out)
    }

    pub fn ntt_inverse(&self) -> Result<RingElem> {
        let mut out = self.clone();
        out.ntt_inverse_in_place()?;
        Ok(out)
    }

    pub fn ntt_forward_in_place(&mut self) -> Result<()> {
        if self.domain != Domain::Coefficient {
            return Err(Error::Domain {
                expected: Domain::Coefficient.name(),
            });
        }
        let n = self.ctx.degree();
        for (chunk, tables) in self.data.chunks_mut(n).zip(self.ctx.tables()) {
            tables.forward(chunk);
        }
        self.domain = Domain::Ntt;
        Ok(())
    }

    pub fn ntt_inverse_in_place(&mut self) -> Result<()> {
        if self.domain != Domain::Ntt {
            return Err(Error::Domain {
                expected: Domain::Ntt.name(),
            });
        }
        let n = self.ctx.degree();
        for (chunk, tables) in self.data.chunks_mut(n).zip(self.ctx.tables()) {
            tables.inverse(chunk);
        }
        self.domain = Domain::Coefficient;
        Ok(())
    }

    /// Converts to the requested domain (no-op when already there).
    pub fn to_domain(&mut self, domain: Domain) {
        match (self.domain, domain) {
            (Domain::Coefficient, Domain::Ntt) => self.ntt_forward_in_place().unwrap(),
            (Domain::Ntt, Domain::Coefficient) => self.ntt_inverse_in_place().unwrap(),
            _ => {}
        }
    }

    fn zip_with(
        &self,
        other: &RingElem,
        f: impl Fn(&super::Modulus, u64, u64) -> u64,
    ) -> Result<RingElem> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.zip_assign(other, f);
        Ok(out)
    }

    fn zip_assign(&mut self, other: &RingElem, f: impl Fn(&super::Modulus, u64, u64) -> u64) {
        let n = self.ctx.degree();
        let ctx = self.ctx.clone();
        for ((dst, src), m) in self
            .data
            .chunks_mut(n)
            .zip(other.data.chunks(n))
            .zip(ctx.moduli())
        {
            for (a, &b) in dst.iter_mut().zip(src) {
                *a = f(m, *a, b);
            }
        }
    }

    pub fn add(&self, other: &RingElem) -> Result<RingElem> {
        self.zip_with(other, |m, a, b| m.add(a, b))
    }

    pub fn sub(&self, other: &RingElem) -> Result<RingElem> {
        self.zip_with(other, |m, a, b| m.sub(a, b))
    }

    pub fn add_assign(&mut self, other: &RingElem) -> Result<()> {
        self.check_compatible(other)?;
        self.zip_assign(other, |m, a, b| m.add(a, b));
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &RingElem) -> Result<()> {
        self.check_compatible(other)?;
        self.zip_assign(other, |m, a, b| m.sub(a, b));
        Ok(())
    }

    pub fn neg(&self) -> RingElem {
        let mut out = self.clone();
        let n = self.ctx.degree();
        for (chunk, m) in out.data.chunks_mut(n).zip(self.ctx.moduli()) {
            for a in chunk {
                *a = m.neg(*a);
            }
        }
        out
    }

    /// Pointwise product; both operands must already be in the NTT domain.
    pub fn mul_pointwise(&self, other: &RingElem) -> Result<RingElem> {
        if self.domain != Domain::Ntt {
            return Err(Error::Domain {
                expected: Domain::Ntt.name(),
            });
        }
        self.zip_with(other, |m, a, b| m.mul(a, b))
    }

    /// Accumulates `a * b` pointwise into `self` (all three in NTT domain).
    pub fn mul_acc_pointwise(&mut self, a: &RingElem, b: &RingElem) -> Result<()> {
        self.check_compatible(a)?;
        self.check_compatible(b)?;
        if self.domain != Domain::Ntt {
            return Err(Error::Domain {
                expected: Domain::Ntt.name(),
            });
        }
        let n = self.ctx.degree();
        let ctx = self.ctx.clone();
        for (i, m) in ctx.moduli().iter().enumerate() {
            let dst = &mut self.data[i * n..(i + 1) * n];
            let x = &a.data[i * n..(i + 1) * n];
            let y = &b.data[i * n..(i + 1) * n];
            for j in 0..n {
                dst[j] = m.add(dst[j], m.mul(x[j], y[j]));
            }
        }
        Ok(())
    }

    /// Negacyclic product. The result is returned in the domain of `self`.
    pub fn mul(&self, other: &RingElem) -> Result<RingElem> {
        if !Arc::ptr_eq(&self.ctx, &other.ctx) && *self.ctx != *other.ctx {
            return Err(Error::mismatch(
                "ring elements belong to different contexts",
            ));
        }
        let domain = self.domain;
        let mut a = self.clone();
        a.to_domain(Domain::Ntt);
        let mut b = other.clone();
        b.to_domain(Domain::Ntt);
        let mut out = a.mul_pointwise(&b)?;
        out.to_domain(domain);
        Ok(out)
    }

    /// Multiplies every coefficient by a signed integer constant.
    pub fn mul_scalar_i64(&self, c: i64) -> RingElem {
        let mut out = self.clone();
        out.mul_scalar_assign(c);
        out
    }

    pub fn mul_scalar_assign(&mut self, c: i64) {
        let n = self.ctx.degree();
        let ctx = self.ctx.clone();
        for (chunk, m) in self.data.chunks_mut(n).zip(ctx.moduli()) {
            let w = m.reduce_i64(c);
            let ws = m.shoup(w);
            for a in chunk {
                *a = m.mul_shoup(*a, w, ws);
            }
        }
    }

    /// Multiplies prime channel `i` by `scalars[i]`.
    pub fn mul_rns_scalar_assign(&mut self, scalars: &[u64]) {
        let n = self.ctx.degree();
        let ctx = self.ctx.clone();
        for ((chunk, m), &w) in self.data.chunks_mut(n).zip(ctx.moduli()).zip(scalars) {
            let ws = m.shoup(w);
            for a in chunk {
                *a = m.mul_shoup(*a, w, ws);
            }
        }
    }

    /// Lifts every coefficient to its representative in `[0, q)`.
    pub fn crt_lift(&self) -> Result<BigPoly> {
        if self.domain != Domain::Coefficient {
            return Err(Error::Domain {
                expected: Domain::Coefficient.name(),
            });
        }
        let ctx = &self.ctx;
        let n = ctx.degree();
        let q = ctx.product();
        // Independent of the limb composer: textbook sum of r_i * q_hat_i * q_hat_inv_i
        let basis: Vec<BigUint> = ctx
            .moduli()
            .iter()
            .map(|m| {
                let hat = q / m.value();
                let hat_mod: u64 = (&hat % m.value()).try_into().unwrap();
                hat * m.inv(hat_mod).unwrap()
            })
            .collect();
        let coefficients = (0..n)
            .map(|j| {
                let mut acc = BigUint::zero();
                for (i, b) in basis.iter().enumerate() {
                    acc += b * self.data[i * n + j];
                }
                acc % q
            })
            .collect();
        Ok(BigPoly { coefficients })
    }

    /// Centered lift of every coefficient to `(-q/2, q/2]`.
    pub fn centered_coefficients(&self) -> Result<Vec<BigInt>> {
        let half = self.ctx.product() >> 1u32;
        let q = BigInt::from(self.ctx.product().clone());
        Ok(self
            .crt_lift()?
            .coefficients
            .into_iter()
            .map(|c| {
                if c > half {
                    BigInt::from(c) - &q
                } else {
                    BigInt::from(c)
                }
            })
            .collect())
    }

    /// `log2` of the infinity norm of the centered coefficients (`None` for zero).
    pub fn inf_norm_log2(&self) -> Result<Option<f64>> {
        if self.domain != Domain::Coefficient {
            return Err(Error::Domain {
                expected: Domain::Coefficient.name(),
            });
        }
        let composer = self.ctx.composer();
        let n = self.ctx.degree();
        let mut buf = vec![0u64; composer.limbs()];
        let mut best: Option<f64> = None;
        for j in 0..n {
            composer.compose_strided(&self.data, n, j, &mut buf);
            composer.center(&mut buf);
            if let Some(l) = super::rns::log2_limbs(&buf) {
                best = Some(best.map_or(l, |b: f64| b.max(l)));
            }
        }
        Ok(best)
    }

    /// Composed coefficients as exact multiprecision values in `[0, q)`,
    /// computed with the fast limb composer.
    pub fn compose_coefficients(&self) -> Vec<BigUint> {
        let composer = self.ctx.composer();
        let n = self.ctx.degree();
        let mut buf = vec![0u64; composer.limbs()];
        (0..n)
            .map(|j| {
                composer.compose_strided(&self.data, n, j, &mut buf);
                limbs_to_biguint(&buf)
            })
            .collect()
    }
}

/// Reduces a lifted polynomial back into residue form.
pub fn crt_reduce(p: &BigPoly, ctx: &Arc<RnsContext>) -> Result<RingElem> {
    let n = ctx.degree();
    if p.coefficients.len() != n {
        return Err(Error::mismatch(format!(
            "expected {n} coefficients, got {}",
            p.coefficients.len()
        )));
    }
    let mut data = vec![0u64; n * ctx.len()];
    for (i, m) in ctx.moduli().iter().enumerate() {
        for (j, c) in p.coefficients.iter().enumerate() {
            data[i * n + j] = (c % m.value()).try_into().unwrap();
        }
    }
    RingElem::from_residues(ctx, data, Domain::Coefficient)
}

/// Signed centered value of a `BigInt` residue helper used by tests and the
/// noise report.
pub fn bigint_abs_log2(v: &BigInt) -> Option<f64> {
    if v.sign() == Sign::NoSign {
        return None;
    }
    let (_, words) = v.to_u64_digits();
    super::rns::log2_limbs(&words)
}
