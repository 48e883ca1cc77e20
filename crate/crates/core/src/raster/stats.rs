//! Per-view, per-primitive average transmittance `T̄ = Σ_k T_k / P`.

use rayon::prelude::*;

use crate::raster::{bin_tiles, project_sorted, tile_bounds, RenderOptions};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};

/// Which pixels count towards `P`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PixelCountMode {
    /// Pixels where the primitive was actually blended (`α' >= cutoff` before termination).
    #[default]
    Contributed,
    /// Every pixel with `α' >= cutoff`, including ones past early termination
    /// (those add the residual transmittance at that depth).
    Overlap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewStats<T> {
    /// `T̄` per primitive, 0 where `P = 0`.
    pub mean_transmittance: Vec<T>,
    /// `P` per primitive.
    pub pixel_count: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransmittanceStats<T> {
    pub views: Vec<ViewStats<T>>,
}

impl<T: Real> TransmittanceStats<T> {
    pub fn mean(&self, view: usize, prim: usize) -> T {
        self.views[view].mean_transmittance[prim]
    }

    pub fn pixels(&self, view: usize, prim: usize) -> u32 {
        self.views[view].pixel_count[prim]
    }
}

fn view_stats<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    view: &CameraView<T>,
    opts: &RenderOptions<T>,
    mode: PixelCountMode,
) -> ViewStats<T> {
    let (w, h) = (view.width, view.height);
    let (splats, _) = project_sorted(primitives, view, opts, false);
    let (tiles_x, bins) = bin_tiles(&splats, w, h);
    // per tile: (sum T, count) for each entry of its bin
    let partials: Vec<Vec<(T, u32)>> = bins
        .par_iter()
        .enumerate()
        .map(|(t, bin)| {
            let [x0, y0, x1, y1] = tile_bounds(t, tiles_x, w, h);
            let mut local = vec![(T::zero(), 0u32); bin.len()];
            for y in y0..y1 {
                for x in x0..x1 {
                    let mut trans = T::one();
                    let mut done = false;
                    for (k, &si) in bin.iter().enumerate() {
                        let s = &splats[si as usize];
                        if !s.covers(x, y) {
                            continue;
                        }
                        let alpha = s.alpha_at(x, y);
                        if alpha < opts.alpha_cutoff {
                            continue;
                        }
                        if !done && trans < opts.min_transmittance {
                            done = true;
                            if mode == PixelCountMode::Contributed {
                                break;
                            }
                        }
                        local[k].0 = local[k].0 + trans;
                        local[k].1 += 1;
                        trans = trans * (T::one() - alpha);
                    }
                }
            }
            local
        })
        .collect();
    let n = primitives.len();
    let mut sum = vec![T::zero(); n];
    let mut count = vec![0u32; n];
    for (bin, local) in bins.iter().zip(partials) {
        for (&si, (s, c)) in bin.iter().zip(local) {
            let id = splats[si as usize].id as usize;
            sum[id] = sum[id] + s;
            count[id] += c;
        }
    }
    let mean_transmittance = sum
        .into_iter()
        .zip(&count)
        .map(|(s, &c)| {
            if c > 0 {
                (s / T::of_usize(c as usize)).min(T::one())
            } else {
                T::zero()
            }
        })
        .collect();
    ViewStats {
        mean_transmittance,
        pixel_count: count,
    }
}

/// Accumulates `T_ik` over the pixels each primitive is splatted to, for every view.
pub fn transmittance_stats<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    opts: &RenderOptions<T>,
    mode: PixelCountMode,
) -> TransmittanceStats<T> {
    TransmittanceStats {
        views: views
            .par_iter()
            .map(|v| view_stats(primitives, v, opts, mode))
            .collect(),
    }
}
