//! Residue number system contexts and exact CRT composition.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::modulus::Modulus;
use super::ntt::NttTables;
use crate::error::{Error, Result};

/// Ring degree plus an ordered set of NTT-friendly primes.
#[derive(Debug)]
pub struct RnsContext {
    degree: usize,
    moduli: Vec<Modulus>,
    tables: Vec<NttTables>,
    product: BigUint,
    composer: CrtComposer,
}

impl PartialEq for RnsContext {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.moduli == other.moduli
    }
}

impl Eq for RnsContext {}

impl RnsContext {
    pub fn new(degree: usize, primes: &[u64]) -> Result<Self> {
        if !degree.is_power_of_two() || degree < 4 {
            return Err(Error::UnsupportedParameters(format!(
                "ring degree {degree} is not a power of two >= 4"
            )));
        }
        if primes.is_empty() {
            return Err(Error::UnsupportedParameters("empty prime list".into()));
        }
        for (i, p) in primes.iter().enumerate() {
            if primes[..i].contains(p) {
                return Err(Error::UnsupportedParameters(format!("duplicate prime {p}")));
            }
            if !super::modulus::is_prime(*p) || *p >= 1 << super::modulus::MAX_MODULUS_BITS {
                return Err(Error::UnsupportedParameters(format!(
                    "{p} is not a prime below 2^62"
                )));
            }
        }
        let moduli: Vec<Modulus> = primes.iter().map(|&p| Modulus::new(p)).collect();
        let tables = moduli
            .iter()
            .map(|&m| {
                NttTables::new(m, degree).ok_or_else(|| {
                    Error::UnsupportedParameters(format!(
                        "prime {} is not 1 mod {}",
                        m.value(),
                        2 * degree
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let product = primes
            .iter()
            .fold(BigUint::one(), |acc, &p| acc * BigUint::from(p));
        let composer = CrtComposer::new(&moduli);
        Ok(RnsContext {
            degree,
            moduli,
            tables,
            product,
            composer,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn primes(&self) -> Vec<u64> {
        self.moduli.iter().map(|m| m.value()).collect()
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn tables(&self) -> &[NttTables] {
        &self.tables
    }

    /// The product of all primes (`q`).
    pub fn product(&self) -> &BigUint {
        &self.product
    }

    pub fn product_bits(&self) -> u64 {
        self.product.bits()
    }

    pub fn composer(&self) -> &CrtComposer {
        &self.composer
    }

    /// Reduces a multiprecision integer into one residue per prime.
    pub fn residues_of(&self, value: &BigUint) -> Vec<u64> {
        self.moduli
            .iter()
            .map(|m| (value % m.value()).try_into().expect("residue fits u64"))
            .collect()
    }
}

/// Exact CRT composition into fixed-width little-endian limbs.
///
/// Composes residues to the unique representative in `[0, Q)` without heap
/// allocation; used on the hot paths of decryption, relinearization and the
/// scale-and-round step of multiplication.
#[derive(Debug, Clone)]
pub struct CrtComposer {
    moduli: Vec<Modulus>,
    limbs: usize,
    q_hat: Vec<Vec<u64>>,
    q_hat_inv: Vec<(u64, u64)>,
    inv_p: Vec<f64>,
    q: Vec<u64>,
    half_q: Vec<u64>,
}

impl CrtComposer {
    pub fn new(moduli: &[Modulus]) -> Self {
        let k = moduli.len();
        let limbs = k + 1;
        let product = moduli
            .iter()
            .fold(BigUint::one(), |acc, m| acc * BigUint::from(m.value()));
        let to_limbs = |v: &BigUint| {
            let mut out = v.to_u64_digits();
            out.resize(limbs, 0);
            out
        };
        let mut q_hat = Vec::with_capacity(k);
        let mut q_hat_inv = Vec::with_capacity(k);
        for m in moduli {
            let hat = &product / BigUint::from(m.value());
            let hat_mod: u64 = (&hat % m.value()).try_into().unwrap();
            let inv = m.inv(hat_mod).expect("pairwise coprime primes");
            q_hat_inv.push((inv, m.shoup(inv)));
            q_hat.push(to_limbs(&hat));
        }
        CrtComposer {
            moduli: moduli.to_vec(),
            limbs,
            q_hat,
            q_hat_inv,
            inv_p: moduli.iter().map(|m| 1.0 / m.value() as f64).collect(),
            q: to_limbs(&product),
            half_q: to_limbs(&(&product >> 1u32)),
        }
    }

    /// Number of 64-bit limbs used by composed values.
    pub fn limbs(&self) -> usize {
        self.limbs
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    /// Composes the residues of coefficient `j` of a prime-major residue
    /// array (`data[i * n + j]`) into `out`, which must hold `limbs()` words.
    #[inline]
    pub fn compose_strided(&self, data: &[u64], n: usize, j: usize, out: &mut [u64]) {
        self.compose_with(|i| data[i * n + j], out)
    }

    pub fn compose(&self, residues: &[u64], out: &mut [u64]) {
        self.compose_with(|i| residues[i], out)
    }

    #[inline]
    fn compose_with(&self, residue: impl Fn(usize) -> u64, out: &mut [u64]) {
        debug_assert_eq!(out.len(), self.limbs);
        out.fill(0);
        let mut frac = 0.0f64;
        for (i, m) in self.moduli.iter().enumerate() {
            let (inv, inv_shoup) = self.q_hat_inv[i];
            let y = m.mul_shoup(residue(i), inv, inv_shoup);
            frac += y as f64 * self.inv_p[i];
            mac_scalar(out, &self.q_hat[i], y);
        }
        // sum(y_i * Q/p_i) = v*Q + x with v = floor(sum(y_i/p_i)); the float
        // estimate may be off by one in either direction.
        let v = frac.floor() as u64;
        if v > 0 && sub_mul_scalar(out, &self.q, v) != 0 {
            add_assign(out, &self.q);
        }
        while cmp(out, &self.q) != std::cmp::Ordering::Less {
            sub_assign(out, &self.q);
        }
    }

    /// Maps a composed value in `[0, Q)` to its centered form, returning
    /// `true` when negative; the magnitude is written back into `value`.
    #[inline]
    pub fn center(&self, value: &mut [u64]) -> bool {
        if cmp(value, &self.half_q) == std::cmp::Ordering::Greater {
            let mut borrow = 0u64;
            for (x, &w) in value.iter_mut().zip(&self.q) {
                let (d1, b1) = w.overflowing_sub(*x);
                let (d2, b2) = d1.overflowing_sub(borrow);
                *x = d2;
                borrow = (b1 | b2) as u64;
            }
            true
        } else {
            false
        }
    }

    pub fn q_limbs(&self) -> &[u64] {
        &self.q
    }
}

/// `acc += a * y` over little-endian limbs; the caller guarantees no overflow.
#[inline(always)]
pub fn mac_scalar(acc: &mut [u64], a: &[u64], y: u64) {
    let mut carry = 0u128;
    for (x, &w) in acc.iter_mut().zip(a) {
        let t = *x as u128 + w as u128 * y as u128 + carry;
        *x = t as u64;
        carry = t >> 64;
    }
}

/// `acc -= a * v`; returns the final borrow (non-zero when the result wrapped).
#[inline(always)]
pub fn sub_mul_scalar(acc: &mut [u64], a: &[u64], v: u64) -> u64 {
    let mut borrow = 0u128;
    let mut carry = 0u128;
    for (x, &w) in acc.iter_mut().zip(a) {
        let prod = w as u128 * v as u128 + carry;
        carry = prod >> 64;
        let sub = (prod as u64) as u128 + borrow;
        let (r, under) = (*x as u128).overflowing_sub(sub);
        *x = r as u64;
        borrow = if under { 1 } else { 0 };
    }
    (carry as u64).wrapping_add(borrow as u64)
}

#[inline(always)]
pub fn add_assign(acc: &mut [u64], a: &[u64]) {
    let mut carry = 0u64;
    for (x, &w) in acc.iter_mut().zip(a) {
        let (s1, c1) = x.overflowing_add(w);
        let (s2, c2) = s1.overflowing_add(carry);
        *x = s2;
        carry = (c1 | c2) as u64;
    }
}

#[inline(always)]
pub fn sub_assign(acc: &mut [u64], a: &[u64]) {
    let mut borrow = 0u64;
    for (x, &w) in acc.iter_mut().zip(a) {
        let (d1, b1) = x.overflowing_sub(w);
        let (d2, b2) = d1.overflowing_sub(borrow);
        *x = d2;
        borrow = (b1 | b2) as u64;
    }
}

#[inline(always)]
pub fn cmp(a: &[u64], b: &[u64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Reduces a little-endian limb integer modulo `m` (Horner from the top).
#[inline(always)]
pub fn reduce_limbs(limbs: &[u64], m: &Modulus) -> u64 {
    let mut r = 0u64;
    for &l in limbs.iter().rev() {
        r = m.reduce_u128(((r as u128) << 64) | l as u128);
    }
    r
}

/// Approximate `log2` of a limb integer; `None` for zero.
pub fn log2_limbs(limbs: &[u64]) -> Option<f64> {
    let top = limbs.iter().rposition(|&l| l != 0)?;
    let mut v = limbs[top] as f64;
    if top > 0 {
        v += limbs[top - 1] as f64 / 18446744073709551616.0;
    }
    Some(v.log2() + 64.0 * top as f64)
}

pub fn limbs_to_biguint(limbs: &[u64]) -> BigUint {
    if limbs.iter().all(|&l| l == 0) {
        return BigUint::zero();
    }
    let words: Vec<u32> = limbs
        .iter()
        .flat_map(|&l| [l as u32, (l >> 32) as u32])
        .collect();
    BigUint::new(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::modulus::ntt_primes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compose_matches_bigint_reconstruction() {
        let primes = ntt_primes(60, 16, 5, &[]);
        let ctx = RnsContext::new(16, &primes).unwrap();
        let composer = ctx.composer();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut out = vec![0u64; composer.limbs()];
        for round in 0..2000 {
            let value = if round < 3 {
                [BigUint::zero(), ctx.product() - 1u32, ctx.product() >> 1u32][round].clone()
            } else {
                let words: Vec<u32> = (0..10).map(|_| rng.gen()).collect();
                BigUint::new(words) % ctx.product()
            };
            let residues = ctx.residues_of(&value);
            composer.compose(&residues, &mut out);
            assert_eq!(limbs_to_biguint(&out), value);
            for m in ctx.moduli() {
                let expect: u64 = (&value % m.value()).try_into().unwrap();
                assert_eq!(reduce_limbs(&out, m), expect);
            }
        }
    }

    #[test]
    fn centering_splits_at_half() {
        let ctx = RnsContext::new(4, &[17, 41]).unwrap();
        let c = ctx.composer();
        let mut v = vec![0u64; c.limbs()];
        // q = 697, half = 348
        c.compose(&[348 % 17, 348 % 41], &mut v);
        assert!(!c.center(&mut v));
        assert_eq!(v[0], 348);
        c.compose(&[349 % 17, 349 % 41], &mut v);
        assert!(c.center(&mut v));
        assert_eq!(v[0], 348);
    }
}
