//! CPU forward splatting: EWA projection, global front-to-back depth order,
//! tile-parallel alpha blending, and per-primitive transmittance statistics.

mod image;
pub mod metrics;
pub mod png;
mod stats;

use rayon::prelude::*;

use crate::math::{self, Vec3};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};
use crate::sh::eval_sh_color;

pub use image::RenderedImage;
pub use metrics::{psnr, ssim};
pub use stats::{transmittance_stats, PixelCountMode, TransmittanceStats, ViewStats};

pub const TILE: u32 = 16;

#[derive(Clone, Debug)]
pub struct RenderOptions<T> {
    /// Camera-space depth below which primitives are culled.
    pub near: T,
    /// Added to the diagonal of every 2D covariance, in px².
    pub dilation: T,
    /// Contributions with `α' < alpha_cutoff` are skipped.
    pub alpha_cutoff: T,
    /// Blending stops once transmittance drops below this.
    pub min_transmittance: T,
    pub background: Vec3<T>,
    /// Upper bound on the SH bands used for color.
    pub max_bands: usize,
}

impl<T: Real> Default for RenderOptions<T> {
    fn default() -> Self {
        Self {
            near: T::lit(0.2),
            dilation: T::lit(0.3),
            alpha_cutoff: T::lit(1.0 / 255.0),
            min_transmittance: T::lit(1e-4),
            background: [T::zero(); 3],
            max_bands: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RenderDiagnostics {
    /// Behind the near plane.
    pub culled_near: usize,
    /// Footprint misses the image or can never reach the alpha cutoff.
    pub culled_outside: usize,
    /// Non-positive 2D covariance determinant after dilation.
    pub degenerate: usize,
}

/// A primitive projected into one view.
#[derive(Clone, Debug)]
pub(crate) struct Splat<T> {
    pub id: u32,
    pub depth: T,
    pub mean: [T; 2],
    /// Inverse 2D covariance `(a, b, c)` of `[[a, b], [b, c]]`.
    pub conic: [T; 3],
    pub opacity: T,
    pub color: Vec3<T>,
    /// Pixel range `[x0, x1) × [y0, y1)` that can receive `α' >= cutoff`.
    pub bbox: [u32; 4],
}

impl<T: Real> Splat<T> {
    /// `α'` at the center of pixel `(x, y)`.
    #[inline]
    pub fn alpha_at(&self, x: u32, y: u32) -> T {
        let half = T::lit(0.5);
        let dx = T::of_usize(x as usize) + half - self.mean[0];
        let dy = T::of_usize(y as usize) + half - self.mean[1];
        let [a, b, c] = self.conic;
        let power = -half * (a * dx * dx + c * dy * dy) - b * dx * dy;
        if power > T::zero() {
            return T::zero();
        }
        self.opacity * power.exp()
    }

    #[inline]
    fn covers(&self, x: u32, y: u32) -> bool {
        x >= self.bbox[0] && x < self.bbox[2] && y >= self.bbox[1] && y < self.bbox[3]
    }
}

/// 3D covariance `R·diag(s²)·Rᵀ` of a primitive.
pub fn covariance_3d<T: Real>(p: &GaussianPrimitive<T>) -> [[T; 3]; 3] {
    let r = p.rotation_matrix();
    let mut m = r;
    for row in m.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v * p.scale[j];
        }
    }
    math::mat_mul(&m, &math::transpose(&m))
}

enum Projection<T> {
    Near,
    Outside,
    Degenerate,
    Visible(Splat<T>),
}

fn project_one<T: Real>(
    id: usize,
    p: &GaussianPrimitive<T>,
    view: &CameraView<T>,
    cam_center: Vec3<T>,
    opts: &RenderOptions<T>,
    with_color: bool,
) -> Projection<T> {
    let pc = view.to_camera(p.position);
    let z = pc[2];
    if !(z > opts.near) {
        return Projection::Near;
    }
    let (w, h) = (
        T::of_usize(view.width as usize),
        T::of_usize(view.height as usize),
    );
    // Jacobian evaluated with the view-space direction clamped to 1.3× the frustum
    let margin = T::lit(0.15);
    let ux_lo = -view.principal_x / view.focal_x;
    let ux_hi = (w - view.principal_x) / view.focal_x;
    let uy_lo = -view.principal_y / view.focal_y;
    let uy_hi = (h - view.principal_y) / view.focal_y;
    let ux = (pc[0] / z)
        .max(ux_lo - margin * (ux_hi - ux_lo))
        .min(ux_hi + margin * (ux_hi - ux_lo));
    let uy = (pc[1] / z)
        .max(uy_lo - margin * (uy_hi - uy_lo))
        .min(uy_hi + margin * (uy_hi - uy_lo));
    let (fx, fy) = (view.focal_x, view.focal_y);
    let j = [
        [fx / z, T::zero(), -fx * ux / z],
        [T::zero(), fy / z, -fy * uy / z],
    ];
    let wr = &view.rotation;
    // t = J·W (2×3)
    let mut t = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            t[r][c] = j[r][0] * wr[0][c] + j[r][1] * wr[1][c] + j[r][2] * wr[2][c];
        }
    }
    let sigma = covariance_3d(p);
    let ts0 = math::mat_t_vec(&sigma, t[0]);
    let ts1 = math::mat_t_vec(&sigma, t[1]);
    let a = math::dot(ts0, t[0]) + opts.dilation;
    let b = math::dot(ts0, t[1]);
    let c = math::dot(ts1, t[1]) + opts.dilation;
    let det = a * c - b * b;
    if !(det > T::zero()) || !det.is_finite() {
        return Projection::Degenerate;
    }
    let conic = [c / det, -b / det, a / det];
    let mean = view.project(pc);

    // α·exp(-d²/(2λ)) >= cutoff  ⇔  d <= sqrt(2λ·ln(α/cutoff)) along the major axis
    let ratio = p.opacity / opts.alpha_cutoff;
    if !(ratio >= T::one()) {
        return Projection::Outside;
    }
    let half = T::lit(0.5);
    let mid = half * (a + c);
    let lambda = mid + (mid * mid - det).max(T::zero()).sqrt();
    let radius = (T::lit(2.0) * lambda * ratio.ln()).sqrt() + T::one();
    let lo = |m: T, lim: u32| -> u32 {
        let v = (m - radius - half).ceil();
        if v <= T::zero() {
            0
        } else {
            v.as_f64().min(lim as f64) as u32
        }
    };
    let hi = |m: T, lim: u32| -> u32 {
        let v = (m + radius - half).floor() + T::one();
        if v <= T::zero() {
            0
        } else {
            v.as_f64().min(lim as f64) as u32
        }
    };
    if !mean[0].is_finite() || !mean[1].is_finite() {
        return Projection::Outside;
    }
    let bbox = [
        lo(mean[0], view.width),
        lo(mean[1], view.height),
        hi(mean[0], view.width),
        hi(mean[1], view.height),
    ];
    if bbox[0] >= bbox[2] || bbox[1] >= bbox[3] {
        return Projection::Outside;
    }
    let color = if with_color {
        let dir = math::normalize(math::sub(p.position, cam_center));
        eval_sh_color(p, dir, opts.max_bands).map(|v| v.max(T::zero()))
    } else {
        [T::zero(); 3]
    };
    Projection::Visible(Splat {
        id: id as u32,
        depth: z,
        mean,
        conic,
        opacity: p.opacity,
        color,
        bbox,
    })
}

/// Projects, culls and depth-sorts (front to back, ties by primitive index).
pub(crate) fn project_sorted<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    view: &CameraView<T>,
    opts: &RenderOptions<T>,
    with_color: bool,
) -> (Vec<Splat<T>>, RenderDiagnostics) {
    let center = view.center();
    let projected: Vec<Projection<T>> = primitives
        .par_iter()
        .enumerate()
        .map(|(i, p)| project_one(i, p, view, center, opts, with_color))
        .collect();
    let mut diag = RenderDiagnostics::default();
    let mut splats = Vec::with_capacity(projected.len());
    for p in projected {
        match p {
            Projection::Near => diag.culled_near += 1,
            Projection::Outside => diag.culled_outside += 1,
            Projection::Degenerate => diag.degenerate += 1,
            Projection::Visible(s) => splats.push(s),
        }
    }
    splats.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    (splats, diag)
}

/// Splat indices (into the sorted list) overlapping each tile, in depth order.
pub(crate) fn bin_tiles<T>(splats: &[Splat<T>], width: u32, height: u32) -> (u32, Vec<Vec<u32>>) {
    let tx = width.div_ceil(TILE);
    let ty = height.div_ceil(TILE);
    let mut bins = vec![Vec::new(); (tx * ty) as usize];
    for (i, s) in splats.iter().enumerate() {
        let (x0, y0) = (s.bbox[0] / TILE, s.bbox[1] / TILE);
        let (x1, y1) = ((s.bbox[2] - 1) / TILE, (s.bbox[3] - 1) / TILE);
        for y in y0..=y1 {
            for x in x0..=x1 {
                bins[(y * tx + x) as usize].push(i as u32);
            }
        }
    }
    (tx, bins)
}

pub(crate) fn tile_bounds(tile: usize, tiles_x: u32, width: u32, height: u32) -> [u32; 4] {
    let (tx, ty) = (tile as u32 % tiles_x, tile as u32 / tiles_x);
    [
        tx * TILE,
        ty * TILE,
        ((tx + 1) * TILE).min(width),
        ((ty + 1) * TILE).min(height),
    ]
}

#[derive(Clone, Debug)]
pub struct RenderOutput<T> {
    pub image: RenderedImage<T>,
    /// Accumulated opacity `Σ α'ᵢ·Tᵢ` per pixel.
    pub alpha: Vec<T>,
    /// Transmittance left after the last blended primitive.
    pub transmittance: Vec<T>,
    pub diagnostics: RenderDiagnostics,
}

/// Renders with full per-pixel bookkeeping.
pub fn render_full<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    view: &CameraView<T>,
    opts: &RenderOptions<T>,
) -> RenderOutput<T> {
    let (w, h) = (view.width, view.height);
    let (splats, diagnostics) = project_sorted(primitives, view, opts, true);
    let (tiles_x, bins) = bin_tiles(&splats, w, h);
    let tiles: Vec<Vec<([T; 3], T, T)>> = bins
        .par_iter()
        .enumerate()
        .map(|(t, bin)| {
            let [x0, y0, x1, y1] = tile_bounds(t, tiles_x, w, h);
            let mut out = Vec::with_capacity(((x1 - x0) * (y1 - y0)) as usize);
            for y in y0..y1 {
                for x in x0..x1 {
                    let mut trans = T::one();
                    let mut acc = [T::zero(); 3];
                    let mut alpha_acc = T::zero();
                    for &si in bin {
                        let s = &splats[si as usize];
                        if !s.covers(x, y) {
                            continue;
                        }
                        let alpha = s.alpha_at(x, y);
                        if alpha < opts.alpha_cutoff {
                            continue;
                        }
                        if trans < opts.min_transmittance {
                            break;
                        }
                        let wgt = alpha * trans;
                        for c in 0..3 {
                            acc[c] = acc[c] + s.color[c] * wgt;
                        }
                        alpha_acc = alpha_acc + wgt;
                        trans = trans * (T::one() - alpha);
                    }
                    for c in 0..3 {
                        acc[c] = acc[c] + trans * opts.background[c];
                    }
                    out.push((acc, alpha_acc, trans));
                }
            }
            out
        })
        .collect();
    let n = (w * h) as usize;
    let mut image = RenderedImage::filled(w, h, [T::zero(); 3]);
    let mut alpha = vec![T::zero(); n];
    let mut transmittance = vec![T::one(); n];
    for (t, px) in tiles.into_iter().enumerate() {
        let [x0, y0, x1, _] = tile_bounds(t, tiles_x, w, h);
        let tw = (x1 - x0) as usize;
        for (k, (rgb, a, tr)) in px.into_iter().enumerate() {
            let (x, y) = (x0 + (k % tw) as u32, y0 + (k / tw) as u32);
            let i = (y * w + x) as usize;
            image.pixels[i] = rgb;
            alpha[i] = a;
            transmittance[i] = tr;
        }
    }
    RenderOutput {
        image,
        alpha,
        transmittance,
        diagnostics,
    }
}

pub fn render<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    view: &CameraView<T>,
    opts: &RenderOptions<T>,
) -> RenderedImage<T> {
    render_full(primitives, view, opts).image
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(size: u32) -> CameraView<f64> {
        // looks down +z from the origin
        CameraView {
            rotation: math::identity(),
            translation: [0.0; 3],
            focal_x: 100.0,
            focal_y: 100.0,
            principal_x: size as f64 / 2.0,
            principal_y: size as f64 / 2.0,
            width: size,
            height: size,
        }
    }

    /// White isotropic Gaussian projecting onto the center of pixel (16, 16) of a 32×32 view.
    fn white(depth: f64, opacity: f64, s: f64) -> GaussianPrimitive<f64> {
        let dc = crate::sh::rgb_to_dc([1.0; 3]);
        // pixel center (16.5, 16.5) ↔ camera offset 0.5/100 per unit depth
        GaussianPrimitive::new(
            [0.005 * depth, 0.005 * depth, depth],
            [s; 3],
            [1.0, 0.0, 0.0, 0.0],
            opacity,
            dc,
        )
    }

    #[test]
    fn empty_scene_is_black() {
        let img = render::<f64>(&[], &view(8), &RenderOptions::default());
        assert!(img.pixels.iter().all(|p| *p == [0.0; 3]));
    }

    #[test]
    fn single_gaussian_center_pixel() {
        let img = render(
            &[white(5.0, 0.7, 0.01)],
            &view(32),
            &RenderOptions::default(),
        );
        let c = img.get(16, 16);
        assert!(c.iter().all(|v| (v - 0.7).abs() < 1e-3), "{c:?}");
    }

    #[test]
    fn two_colocated_half_opacity() {
        let prims = [white(5.0, 0.5, 0.01), white(5.0, 0.5, 0.01)];
        let img = render(&prims, &view(32), &RenderOptions::default());
        let c = img.get(16, 16);
        assert!(c.iter().all(|v| (v - 0.75).abs() < 1e-3), "{c:?}");
    }

    #[test]
    fn degenerate_covariance_is_counted() {
        let mut p = white(5.0, 0.5, 0.01);
        p.scale = [f64::NAN; 3];
        let opts = RenderOptions::default();
        let out = render_full(&[p], &view(16), &opts);
        assert_eq!(out.diagnostics.degenerate, 1);
        let mut q = white(5.0, 0.5, 0.01);
        q.position[2] = -1.0;
        assert_eq!(
            render_full(&[q], &view(16), &opts).diagnostics.culled_near,
            1
        );
    }

    #[test]
    fn conservation_per_pixel() {
        let prims: Vec<_> = (0..30)
            .map(|i| {
                let mut p = white(3.0 + i as f64 * 0.1, 0.3 + 0.02 * i as f64, 0.05);
                p.position[0] += (i as f64 * 0.37).sin() * 0.2;
                p.position[1] += (i as f64 * 0.91).cos() * 0.2;
                p
            })
            .collect();
        let out = render_full(&prims, &view(32), &RenderOptions::default());
        for (a, t) in out.alpha.iter().zip(&out.transmittance) {
            assert!((a + t - 1.0).abs() < 1e-5);
        }
    }
}
