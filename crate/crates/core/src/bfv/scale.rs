//! Exact tensoring support: basis extension `Q → P` and the `t/q`
//! scale-and-round, both through full-precision CRT composition.

use super::params::BfvParams;
use crate::ring::rns::reduce_limbs;
use crate::ring::{Domain, RingElem};

/// Re-expresses the centered lift of `e` (coefficient domain over `Q`) in the
/// auxiliary basis `P`.
pub(crate) fn extend_to_aux(params: &BfvParams, e: &RingElem) -> RingElem {
    debug_assert_eq!(e.domain(), Domain::Coefficient);
    let n = params.degree();
    let composer = params.ring().composer();
    let aux = params.aux();
    let mut out = RingElem::zero(aux, Domain::Coefficient);
    let mut buf = vec![0u64; composer.limbs()];
    let data = e.residues();
    let dst = out.residues_mut();
    for j in 0..n {
        composer.compose_strided(data, n, j, &mut buf);
        let neg = composer.center(&mut buf);
        for (i, m) in aux.moduli().iter().enumerate() {
            let r = reduce_limbs(&buf, m);
            dst[i * n + j] = if neg { m.neg(r) } else { r };
        }
    }
    out
}

/// Given the same integer polynomial `z` in both bases (coefficient domain),
/// returns `round(t·z/q)` over `Q`.
pub(crate) fn scale_round(params: &BfvParams, zq: &RingElem, zp: &RingElem) -> RingElem {
    let n = params.degree();
    let ring = params.ring();
    let aux = params.aux();
    let cq = ring.composer();
    let cp = aux.composer();
    let c = &params.c;
    let mut out = RingElem::zero(ring, Domain::Coefficient);
    let mut wq = vec![0u64; ring.len()];
    let mut yp = vec![0u64; aux.len()];
    let mut rho = vec![0u64; cq.limbs()];
    let mut y = vec![0u64; cp.limbs()];
    let zq = zq.residues();
    let zp = zp.residues();
    let dst = out.residues_mut();
    for j in 0..n {
        // rho = (t·z + ⌊q/2⌋) mod q
        for (i, m) in ring.moduli().iter().enumerate() {
            wq[i] = m.add(m.mul(zq[i * n + j], c.t_q[i]), c.half_q_q[i]);
        }
        cq.compose(&wq, &mut rho);
        // y = (t·z + ⌊q/2⌋ − rho) / q, exact in P
        for (i, m) in aux.moduli().iter().enumerate() {
            let w = m.add(m.mul(zp[i * n + j], c.t_p[i]), c.half_q_p[i]);
            let r = reduce_limbs(&rho, m);
            yp[i] = m.mul(m.sub(w, r), c.q_inv_p[i]);
        }
        cp.compose(&yp, &mut y);
        let neg = cp.center(&mut y);
        for (i, m) in ring.moduli().iter().enumerate() {
            let r = reduce_limbs(&y, m);
            dst[i * n + j] = if neg { m.neg(r) } else { r };
        }
    }
    out
}

/// Splits every coefficient of `e` (in `[0, q)`) into `relin_len` base-`w`
/// digits; digit polynomials are returned coefficient-wise as small values.
pub(crate) fn decompose(params: &BfvParams, e: &RingElem) -> Vec<Vec<u64>> {
    debug_assert_eq!(e.domain(), Domain::Coefficient);
    let n = params.degree();
    let composer = params.ring().composer();
    let bits = params.relin_bits() as usize;
    let count = params.relin_len();
    let mask = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let mut digits = vec![vec![0u64; n]; count];
    let mut buf = vec![0u64; composer.limbs()];
    for j in 0..n {
        composer.compose_strided(e.residues(), n, j, &mut buf);
        for (d, digit) in digits.iter_mut().enumerate() {
            let pos = d * bits;
            let (limb, off) = (pos / 64, pos % 64);
            let mut v = buf.get(limb).copied().unwrap_or(0) >> off;
            if off + bits > 64 {
                v |= buf.get(limb + 1).copied().unwrap_or(0) << (64 - off);
            }
            digit[j] = v & mask;
        }
    }
    digits
}
