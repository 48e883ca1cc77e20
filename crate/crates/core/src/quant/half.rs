//! IEEE 754 binary16 conversion for positions and codebook entries.

pub use half::f16;

use crate::scalar::Real;

/// Largest finite binary16 magnitude.
pub const HALF_MAX: f64 = 65504.0;

/// Rounds to the nearest binary16 value, ties to even.
///
/// `f16::from_f64` may round through `f32` first, which is off by one step
/// just below a midpoint; the neighbours are checked against the exact value.
pub fn to_half<T: Real>(v: T) -> f16 {
    let x = v.as_f64();
    let h = f16::from_f64(x);
    if !h.is_finite() || !x.is_finite() {
        return h;
    }
    let bits = h.to_bits();
    let step = |up: bool| -> Option<f16> {
        // moving away from zero increments the magnitude bits
        let away = (x >= 0.0) == up;
        let mag = bits & 0x7fff;
        let sign = bits & 0x8000;
        let m = if away {
            mag.checked_add(1)?
        } else {
            mag.checked_sub(1)?
        };
        let n = f16::from_bits(sign | m);
        n.is_finite().then_some(n)
    };
    let mut best = h;
    let mut err = (h.to_f64() - x).abs();
    for n in [step(true), step(false)].into_iter().flatten() {
        let e = (n.to_f64() - x).abs();
        if e < err || (e == err && n.to_bits() & 1 == 0 && best.to_bits() & 1 == 1) {
            best = n;
            err = e;
        }
    }
    best
}

#[inline]
pub fn from_half<T: Real>(h: f16) -> T {
    T::lit(h.to_f64())
}

/// `from_half(to_half(v))`.
#[inline]
pub fn round_half<T: Real>(v: T) -> T {
    from_half(to_half(v))
}

/// Power-of-two divisor that brings `max_abs` strictly inside the binary16 range.
///
/// Returns 1 when no rescale is needed. Powers of two keep the similarity
/// transform exact in binary floating point.
pub fn half_range_scale(max_abs: f64) -> f64 {
    if !(max_abs >= HALF_MAX) || !max_abs.is_finite() {
        return 1.0;
    }
    let mut s = 1.0f64;
    while max_abs / s >= HALF_MAX / 2.0 {
        s *= 2.0;
    }
    s
}
