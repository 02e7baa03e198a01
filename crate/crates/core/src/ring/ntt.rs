//! Negacyclic number-theoretic transform over `Z_p[X]/(X^N + 1)`.
//!
//! The forward transform leaves evaluations in bit-reversed order: output
//! index `j` holds `a(psi^(2*bitrev(j) + 1))`.

use super::modulus::{primitive_root_2n, Modulus};

#[derive(Clone, Debug)]
pub struct NttTables {
    modulus: Modulus,
    degree: usize,
    psi: u64,
    // psi^bitrev(i) and its Shoup companion
    fwd: Vec<u64>,
    fwd_shoup: Vec<u64>,
    // psi^-bitrev(i)
    inv: Vec<u64>,
    inv_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

pub fn bit_reverse(mut x: usize, log_n: u32) -> usize {
    let mut r = 0;
    for _ in 0..log_n {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    r
}

impl NttTables {
    /// Builds tables for degree `n`; `None` if `p` has no primitive `2n`-th root.
    pub fn new(modulus: Modulus, n: usize) -> Option<Self> {
        assert!(n.is_power_of_two() && n >= 2);
        let psi = primitive_root_2n(&modulus, n)?;
        let psi_inv = modulus.inv(psi)?;
        let log_n = n.trailing_zeros();
        let mut fwd = vec![0u64; n];
        let mut inv = vec![0u64; n];
        let (mut pw, mut pw_inv) = (1u64, 1u64);
        for i in 0..n {
            let r = bit_reverse(i, log_n);
            fwd[r] = pw;
            inv[r] = pw_inv;
            pw = modulus.mul(pw, psi);
            pw_inv = modulus.mul(pw_inv, psi_inv);
        }
        let fwd_shoup = fwd.iter().map(|&w| modulus.shoup(w)).collect();
        let inv_shoup = inv.iter().map(|&w| modulus.shoup(w)).collect();
        let n_inv = modulus.inv(n as u64)?;
        Some(NttTables {
            modulus,
            degree: n,
            psi,
            fwd,
            fwd_shoup,
            inv,
            inv_shoup,
            n_inv,
            n_inv_shoup: modulus.shoup(n_inv),
        })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The primitive `2N`-th root used by these tables.
    pub fn psi(&self) -> u64 {
        self.psi
    }

    pub fn forward(&self, a: &mut [u64]) {
        let n = self.degree;
        debug_assert_eq!(a.len(), n);
        let p = &self.modulus;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t >>= 1;
            for i in 0..m {
                let w = self.fwd[m + i];
                let ws = self.fwd_shoup[m + i];
                let start = 2 * i * t;
                let (lo, hi) = a[start..start + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = p.mul_shoup(*y, w, ws);
                    *x = p.add(u, v);
                    *y = p.sub(u, v);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        let n = self.degree;
        debug_assert_eq!(a.len(), n);
        let p = &self.modulus;
        let mut t = 1;
        let mut m = n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let w = self.inv[h + i];
                let ws = self.inv_shoup[h + i];
                let start = 2 * i * t;
                let (lo, hi) = a[start..start + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = p.add(u, v);
                    *y = p.mul_shoup(p.sub(u, v), w, ws);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = p.mul_shoup(*x, self.n_inv, self.n_inv_shoup);
        }
    }
}
