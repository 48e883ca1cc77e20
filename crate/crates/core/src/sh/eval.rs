//! Real spherical harmonics up to degree 3 in the 3DGS convention
//! (Condon-Shortley phase, `m = -l..=l` ordering, color offset 0.5).

use crate::math::Vec3;
use crate::scalar::Real;
use crate::scene::{sh_groups, GaussianPrimitive};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis values for the 15 non-DC functions at unit direction `d`.
pub fn sh_basis<T: Real>(d: Vec3<T>) -> [T; 15] {
    let [x, y, z] = d;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let c = T::lit;
    let two = c(2.0);
    let three = c(3.0);
    let four = c(4.0);
    [
        -c(SH_C1) * y,
        c(SH_C1) * z,
        -c(SH_C1) * x,
        c(SH_C2[0]) * x * y,
        c(SH_C2[1]) * y * z,
        c(SH_C2[2]) * (two * zz - xx - yy),
        c(SH_C2[3]) * x * z,
        c(SH_C2[4]) * (xx - yy),
        c(SH_C3[0]) * y * (three * xx - yy),
        c(SH_C3[1]) * x * y * z,
        c(SH_C3[2]) * y * (four * zz - xx - yy),
        c(SH_C3[3]) * z * (two * zz - three * xx - three * yy),
        c(SH_C3[4]) * x * (four * zz - xx - yy),
        c(SH_C3[5]) * z * (xx - yy),
        c(SH_C3[6]) * x * (xx - three * yy),
    ]
}

/// Color seen along unit direction `dir` using bands `0..=bands`, unclamped.
///
/// `bands` is clipped to the primitive's own band count.
pub fn eval_sh_color<T: Real>(p: &GaussianPrimitive<T>, dir: Vec3<T>, bands: usize) -> Vec3<T> {
    let half = T::lit(0.5);
    let c0 = T::lit(SH_C0);
    let mut out = [0, 1, 2].map(|ch| half + c0 * p.base_color[ch]);
    let groups = sh_groups(bands.min(p.band_count()));
    if groups == 0 {
        return out;
    }
    let basis = sh_basis(dir);
    for (g, coeff) in p.sh_rest[..groups].iter().enumerate() {
        for ch in 0..3 {
            out[ch] = out[ch] + basis[g] * coeff[ch];
        }
    }
    out
}

/// Colors for every truncation `q = 0..=3` in one pass over the basis.
pub fn eval_sh_truncations<T: Real>(p: &GaussianPrimitive<T>, dir: Vec3<T>) -> [Vec3<T>; 4] {
    let half = T::lit(0.5);
    let c0 = T::lit(SH_C0);
    let mut acc = [0, 1, 2].map(|ch| half + c0 * p.base_color[ch]);
    let mut out = [acc; 4];
    let bands = p.band_count();
    if bands == 0 {
        return out;
    }
    let basis = sh_basis(dir);
    for q in 1..=3 {
        if q <= bands {
            for g in sh_groups(q - 1)..sh_groups(q) {
                for ch in 0..3 {
                    acc[ch] = acc[ch] + basis[g] * p.sh_rest[g][ch];
                }
            }
        }
        out[q] = acc;
    }
    out
}

/// DC coefficients that reproduce `rgb` with no higher bands.
pub fn rgb_to_dc<T: Real>(rgb: Vec3<T>) -> Vec3<T> {
    rgb.map(|v| (v - T::lit(0.5)) / T::lit(SH_C0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prim(dc: [f64; 3], rest: Vec<[f64; 3]>) -> GaussianPrimitive<f64> {
        GaussianPrimitive {
            position: [0.0; 3],
            scale: [1.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            opacity: 1.0,
            base_color: dc,
            sh_rest: rest,
        }
    }

    #[test]
    fn zero_coefficients_give_half_gray() {
        let p = prim([0.0; 3], vec![[0.0; 3]; 15]);
        assert_eq!(eval_sh_color(&p, [0.0, 0.0, 1.0], 3), [0.5; 3]);
    }

    #[test]
    fn dc_offset_linearity() {
        let p = prim([0.5 / SH_C0, 0.0, 0.0], vec![]);
        let c = eval_sh_color(&p, [1.0, 0.0, 0.0], 3);
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert_eq!(&c[1..], &[0.5, 0.5]);
        assert_eq!(rgb_to_dc([1.0, 0.5, 0.5]), [0.5 / SH_C0, 0.0, 0.0]);
    }

    #[test]
    fn truncations_match_band_limited_eval() {
        let rest: Vec<[f64; 3]> = (0..15)
            .map(|g| [g as f64 * 0.1, -0.2, 0.05 * g as f64])
            .collect();
        let p = prim([0.3, -0.1, 0.2], rest);
        let d = crate::math::normalize([0.3, -0.7, 0.2]);
        let t = eval_sh_truncations(&p, d);
        for q in 0..4 {
            assert_eq!(t[q], eval_sh_color(&p, d, q));
        }
    }
}
