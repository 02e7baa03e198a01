//! Fixed-point scalar encoding and the centered representative convention.

use num_bigint::{BigInt, BigUint, Sign};

use crate::error::{Error, Result};

/// `round(x·Δ)`, ties away from zero.
pub fn encode_scalar(x: f64, delta: u64) -> i64 {
    assert!(delta >= 1, "scale must be positive");
    (x * delta as f64).round() as i64
}

pub fn decode_scalar(v: i64, delta: u64) -> f64 {
    v as f64 / delta as f64
}

/// Maps `v` with `|v| < t/2` into `[0, t)`.
pub fn to_modular(v: i64, t: u64) -> Result<u64> {
    if 2 * v.unsigned_abs() as u128 >= t as u128 {
        return Err(Error::Overflow {
            value: v.to_string(),
            modulus: t.to_string(),
        });
    }
    Ok(if v < 0 {
        t - v.unsigned_abs()
    } else {
        v as u64
    })
}

/// Centered lift of `u ∈ [0, t)`: `u` if `u ≤ ⌊t/2⌋`, else `u − t`.
pub fn from_modular(u: u64, t: u64) -> i64 {
    debug_assert!(u < t);
    if u <= t / 2 {
        u as i64
    } else {
        -((t - u) as i64)
    }
}

pub fn to_modular_big(v: &BigInt, t: &BigUint) -> Result<BigUint> {
    let mag = v.magnitude();
    if mag * 2u32 >= *t {
        return Err(Error::Overflow {
            value: v.to_string(),
            modulus: t.to_string(),
        });
    }
    Ok(if v.sign() == Sign::Minus {
        t - mag
    } else {
        mag.clone()
    })
}

pub fn from_modular_big(u: &BigUint, t: &BigUint) -> BigInt {
    if *u <= t >> 1u32 {
        BigInt::from(u.clone())
    } else {
        -BigInt::from(t - u)
    }
}

/// Reduces an arbitrary signed integer into `[0, t)` (no range check).
pub fn reduce_signed(v: &BigInt, t: u64) -> u64 {
    let r = v % BigInt::from(t);
    let r = i64::try_from(r).unwrap();
    if r < 0 {
        (r + t as i64) as u64
    } else {
        r as u64
    }
}
