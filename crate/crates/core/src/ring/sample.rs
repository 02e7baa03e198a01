use std::sync::Arc;

use rand::{Rng, RngCore};

use super::poly::RingElem;
use super::rns::RnsContext;

/// Standard deviation of the error distribution.
pub const NOISE_SIGMA: f64 = 3.2;

/// Samples are truncated to `|v| <= NOISE_BOUND` (about 6 sigma).
pub const NOISE_BOUND: i64 = 19;

/// Discrete Gaussian over the integers by inversion against a cumulative table.
#[derive(Clone, Debug)]
pub struct DiscreteGaussian {
    sigma: f64,
    bound: i64,
    // cdt[k] = P(|X| <= k) scaled to u64, folded on the sign
    cdt: Vec<u64>,
}

impl DiscreteGaussian {
    pub fn new(sigma: f64, bound: i64) -> Self {
        assert!(sigma > 0.0 && bound >= 1);
        let weights: Vec<f64> = (0..=bound)
            .map(|k| {
                let w = (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp();
                if k == 0 {
                    w
                } else {
                    2.0 * w
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdt = Vec::with_capacity(weights.len());
        for w in &weights {
            acc += w / total;
            cdt.push(if acc >= 1.0 {
                u64::MAX
            } else {
                (acc * u64::MAX as f64) as u64
            });
        }
        *cdt.last_mut().unwrap() = u64::MAX;
        DiscreteGaussian { sigma, bound, cdt }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> i64 {
        let u = rng.next_u64();
        let k = self.cdt.partition_point(|&c| c < u) as i64;
        let k = k.min(self.bound);
        if k != 0 && rng.next_u32() & 1 == 1 {
            -k
        } else {
            k
        }
    }

    pub fn sample_vec<R: RngCore + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<i64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl Default for DiscreteGaussian {
    fn default() -> Self {
        DiscreteGaussian::new(NOISE_SIGMA, NOISE_BOUND)
    }
}

/// Uniform element of `R_q`, coefficient domain.
pub fn sample_uniform<R: RngCore + ?Sized>(ctx: &Arc<RnsContext>, rng: &mut R) -> RingElem {
    let n = ctx.degree();
    let mut out = RingElem::zero(ctx, super::Domain::Coefficient);
    for (i, m) in ctx.moduli().iter().enumerate() {
        let p = m.value();
        for x in &mut out.residues_mut()[i * n..(i + 1) * n] {
            *x = rng.gen_range(0..p);
        }
    }
    out
}

/// Polynomial with coefficients drawn uniformly from `{0, 1}`.
pub fn sample_binary<R: RngCore + ?Sized>(ctx: &Arc<RnsContext>, rng: &mut R) -> RingElem {
    let coeffs: Vec<i64> = (0..ctx.degree())
        .map(|_| (rng.next_u32() & 1) as i64)
        .collect();
    RingElem::from_signed(ctx, &coeffs)
}

/// Error polynomial from the default discrete Gaussian.
pub fn sample_noise<R: RngCore + ?Sized>(ctx: &Arc<RnsContext>, rng: &mut R) -> RingElem {
    let g = DiscreteGaussian::default();
    RingElem::from_signed(ctx, &g.sample_vec(rng, ctx.degree()))
}
