//! PSNR and SSIM on `[0, 1]` RGB images.

use crate::raster::RenderedImage;
use crate::scalar::Real;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn check_dims<T>(a: &RenderedImage<T>, b: &RenderedImage<T>) {
    assert!(
        a.width == b.width && a.height == b.height,
        "image dimensions differ: {}x{} vs {}x{}",
        a.width,
        a.height,
        b.width,
        b.height
    );
}

pub fn mse<T: Real>(a: &RenderedImage<T>, b: &RenderedImage<T>) -> T {
    check_dims(a, b);
    let n = T::of_usize(a.pixels.len() * 3);
    a.pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]) * (p[c] - q[c])).sum::<T>())
        .sum::<T>()
        / n
}

/// `10·log10(1 / MSE)`; `+∞` for identical images.
///
/// # Panics
/// When the dimensions differ.
pub fn psnr<T: Real>(a: &RenderedImage<T>, b: &RenderedImage<T>) -> T {
    let m = mse(a, b);
    if m == T::zero() {
        return T::infinity();
    }
    T::lit(10.0) * (T::one() / m).log10()
}

fn gaussian_kernel<T: Real>() -> Vec<T> {
    let r = (SSIM_WINDOW / 2) as i64;
    let w: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| T::lit(v / s)).collect()
}

/// Separable Gaussian blur; near borders the window is truncated and renormalized.
fn blur<T: Real>(plane: &[T], w: usize, h: usize, kernel: &[T]) -> Vec<T> {
    let r = kernel.len() / 2;
    let pass = |src: &[T], horizontal: bool| -> Vec<T> {
        let mut out = vec![T::zero(); src.len()];
        for y in 0..h {
            for x in 0..w {
                let (pos, len) = if horizontal { (x, w) } else { (y, h) };
                let lo = pos.saturating_sub(r);
                let hi = (pos + r).min(len - 1);
                let mut acc = T::zero();
                let mut norm = T::zero();
                for q in lo..=hi {
                    let k = kernel[q + r - pos];
                    let v = if horizontal {
                        src[y * w + q]
                    } else {
                        src[q * w + x]
                    };
                    acc = acc + k * v;
                    norm = norm + k;
                }
                out[y * w + x] = acc / norm;
            }
        }
        out
    };
    pass(&pass(plane, true), false)
}

/// Mean SSIM over pixels and channels (11×11 Gaussian window, σ = 1.5, data range 1).
///
/// # Panics
/// When the dimensions differ.
pub fn ssim<T: Real>(a: &RenderedImage<T>, b: &RenderedImage<T>) -> T {
    check_dims(a, b);
    let (w, h) = (a.width as usize, a.height as usize);
    if w == 0 || h == 0 {
        return T::one();
    }
    let kernel = gaussian_kernel::<T>();
    let c1 = T::lit(SSIM_K1 * SSIM_K1);
    let c2 = T::lit(SSIM_K2 * SSIM_K2);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for c in 0..3 {
        let x = a.channel(c);
        let y = b.channel(c);
        let xx: Vec<T> = x.iter().map(|v| *v * *v).collect();
        let yy: Vec<T> = y.iter().map(|v| *v * *v).collect();
        let xy: Vec<T> = x.iter().zip(&y).map(|(p, q)| *p * *q).collect();
        let mx = blur(&x, w, h, &kernel);
        let my = blur(&y, w, h, &kernel);
        let sxx = blur(&xx, w, h, &kernel);
        let syy = blur(&yy, w, h, &kernel);
        let sxy = blur(&xy, w, h, &kernel);
        for i in 0..w * h {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            let num = (two * ux * uy + c1) * (two * cov + c2);
            let den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
            total = total + num / den;
        }
    }
    total / T::of_usize(3 * w * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let mut img = RenderedImage::filled(20, 17, [0.2f64, 0.4, 0.9]);
        img.set(3, 4, [1.0, 0.0, 0.5]);
        assert_eq!(psnr(&img, &img), f64::INFINITY);
        assert!((ssim(&img, &img) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_images_psnr() {
        let a = RenderedImage::filled(8, 8, [0.5f64; 3]);
        let b = RenderedImage::filled(8, 8, [0.75f64; 3]);
        assert!((mse(&a, &b) - 0.0625).abs() < 1e-15);
        assert!((psnr(&a, &b) - 10.0 * 16f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b) - 12.04).abs() < 0.01);
    }

    #[test]
    fn constant_images_ssim_closed_form() {
        let a = RenderedImage::filled(16, 12, [0.3f64; 3]);
        let b = RenderedImage::filled(16, 12, [0.6f64; 3]);
        let c1 = SSIM_K1 * SSIM_K1;
        let want = (2.0 * 0.3 * 0.6 + c1) / (0.09 + 0.36 + c1);
        assert!((ssim(&a, &b) - want).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn mismatched_dimensions_panic() {
        let a = RenderedImage::filled(4, 4, [0.0f32; 3]);
        let b = RenderedImage::filled(4, 5, [0.0f32; 3]);
        psnr(&a, &b);
    }
}
