//! Uniform `k`-bit weight quantizer and its integer form.

/// Quantizes `w` to `j/(2^k−1)` and returns the numerator `j`.
///
/// Inputs outside `[−1, 1]` are clamped; ties round away from zero.
pub fn quantize_weight(w: f64, k: u32) -> i64 {
    assert!((1..=62).contains(&k), "bit width must be in 1..=62");
    let levels = ((1u64 << k) - 1) as f64;
    (w.clamp(-1.0, 1.0) * levels).round() as i64
}

/// `round(j·Δ_w/(2^k−1))`, half away from zero: the integer weight at
/// scale `Δ_w` for quantization level `j`.
pub fn integerize(j: i64, k: u32, weight_scale: u64) -> i64 {
    let levels = (1i128 << k) - 1;
    let num = j as i128 * weight_scale as i128;
    let q = (2 * num.abs() + levels) / (2 * levels);
    (if num < 0 { -q } else { q }) as i64
}

/// Whether `v` is `integerize(j, k, Δ_w)` for some `|j| ≤ 2^k−1`.
pub fn is_representable(v: i64, k: u32, weight_scale: u64) -> bool {
    let levels = (1i64 << k) - 1;
    if v.unsigned_abs() > weight_scale {
        return false;
    }
    // nearest candidate level, then check its neighbours
    let guess = (v as f64 * levels as f64 / weight_scale as f64).round() as i64;
    (guess - 1..=guess + 1)
        .filter(|j| j.abs() <= levels)
        .any(|j| integerize(j, k, weight_scale) == v)
}
