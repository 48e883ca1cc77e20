//! Per-primitive SH band selection from transmittance-weighted color statistics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::math::{self, Vec3};
use crate::raster::{transmittance_stats, PixelCountMode, RenderOptions, TransmittanceStats};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};
use crate::sh::eval::{eval_sh_truncations, rgb_to_dc};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShThresholds<T> {
    /// Color spread below which a primitive collapses to band 0.
    pub eps_sigma: T,
    /// Color distance below which higher bands are dropped.
    pub eps_cdist: T,
}

impl<T: Real> ShThresholds<T> {
    pub fn new(eps_sigma: f64, eps_cdist: f64) -> Self {
        Self {
            eps_sigma: T::lit(eps_sigma),
            eps_cdist: T::lit(eps_cdist),
        }
    }

    pub fn default_preset() -> Self {
        Self::new(0.04, 0.04)
    }

    pub fn low() -> Self {
        Self::new(0.01, 0.0068)
    }

    pub fn high() -> Self {
        Self::new(0.06, 0.054)
    }
}

impl<T: Real> Default for ShThresholds<T> {
    fn default() -> Self {
        Self::default_preset()
    }
}

/// How the weighted second moment is compared against `eps_sigma`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SigmaMode {
    /// Square root of the weighted variance.
    #[default]
    StdDev,
    /// The weighted variance itself.
    Variance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorStats<T> {
    pub mean: Vec3<T>,
    /// Weighted per-channel variance.
    pub variance: Vec3<T>,
    pub weight_sum: T,
    /// `false` when the total weight is zero; `mean` is then unweighted.
    pub observed: bool,
}

impl<T: Real> ColorStats<T> {
    pub fn sigma(&self, mode: SigmaMode) -> Vec3<T> {
        match mode {
            SigmaMode::StdDev => self.variance.map(|v| v.max(T::zero()).sqrt()),
            SigmaMode::Variance => self.variance,
        }
    }
}

/// `μ = Σ cᵢwᵢ / Σ wᵢ`, `var = Σ (cᵢ-μ)² wᵢ / Σ wᵢ` per channel.
pub fn weighted_color_stats<T: Real>(colors: &[Vec3<T>], weights: &[T]) -> ColorStats<T> {
    let wsum: T = weights.iter().copied().sum();
    if !(wsum > T::zero()) {
        let n = T::of_usize(colors.len().max(1));
        let mut mean = [T::zero(); 3];
        for c in colors {
            mean = math::add(mean, *c);
        }
        return ColorStats {
            mean: math::scale(mean, T::one() / n),
            variance: [T::zero(); 3],
            weight_sum: T::zero(),
            observed: false,
        };
    }
    // shifted by the first color so identical colors give exactly zero spread
    let origin = colors[0];
    let mut shift = [T::zero(); 3];
    for (c, w) in colors.iter().zip(weights) {
        shift = math::add(shift, math::scale(math::sub(*c, origin), *w));
    }
    shift = math::scale(shift, T::one() / wsum);
    let mut var = [T::zero(); 3];
    for (c, w) in colors.iter().zip(weights) {
        for ch in 0..3 {
            let d = c[ch] - origin[ch] - shift[ch];
            var[ch] = var[ch] + d * d * *w;
        }
    }
    ColorStats {
        mean: math::add(origin, shift),
        variance: var.map(|v| v / wsum),
        weight_sum: wsum,
        observed: true,
    }
}

/// Color statistics and band-truncation distances of one primitive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShStatistics<T> {
    pub color: ColorStats<T>,
    /// Weighted mean of `‖c_full − c_q‖` for `q = 0, 1, 2`.
    pub distances: [T; 3],
}

/// Views that see the primitive (`P > 0`), with their `T̄` and full colors.
fn observations<T: Real>(
    p: &GaussianPrimitive<T>,
    id: usize,
    centers: &[Vec3<T>],
    stats: &TransmittanceStats<T>,
) -> (Vec<[Vec3<T>; 4]>, Vec<T>) {
    let mut colors = Vec::new();
    let mut weights = Vec::new();
    for (v, center) in centers.iter().enumerate() {
        if stats.pixels(v, id) == 0 {
            continue;
        }
        let dir = math::normalize(math::sub(p.position, *center));
        colors.push(eval_sh_truncations(p, dir));
        weights.push(stats.mean(v, id));
    }
    if colors.is_empty() {
        // unobserved everywhere: fall back to every view for the unweighted mean
        for center in centers {
            let dir = math::normalize(math::sub(p.position, *center));
            colors.push(eval_sh_truncations(p, dir));
            weights.push(T::zero());
        }
    }
    (colors, weights)
}

fn primitive_statistics<T: Real>(
    p: &GaussianPrimitive<T>,
    id: usize,
    centers: &[Vec3<T>],
    stats: &TransmittanceStats<T>,
) -> ShStatistics<T> {
    let (obs, weights) = observations(p, id, centers, stats);
    let full = p.band_count();
    let colors: Vec<Vec3<T>> = obs.iter().map(|t| t[full]).collect();
    let color = if colors.is_empty() {
        // no views at all
        let c = eval_sh_truncations(p, [T::zero(), T::zero(), T::one()])[0];
        ColorStats {
            mean: c,
            variance: [T::zero(); 3],
            weight_sum: T::zero(),
            observed: false,
        }
    } else {
        weighted_color_stats(&colors, &weights)
    };
    let mut distances = [T::zero(); 3];
    if color.observed {
        for (q, d) in distances.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (t, w) in obs.iter().zip(&weights) {
                acc = acc + math::norm(math::sub(t[full], t[q])) * *w;
            }
            *d = acc / color.weight_sum;
        }
    }
    ShStatistics { color, distances }
}

/// Statistics for every primitive; `views` must be the views `stats` was computed on.
pub fn sh_statistics<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    stats: &TransmittanceStats<T>,
) -> Vec<ShStatistics<T>> {
    let centers: Vec<Vec3<T>> = views.iter().map(CameraView::center).collect();
    primitives
        .par_iter()
        .enumerate()
        .map(|(i, p)| primitive_statistics(p, i, &centers, stats))
        .collect()
}

/// Transmittance-weighted mean and variance of the full color per primitive.
pub fn color_statistics<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    stats: &TransmittanceStats<T>,
) -> Vec<ColorStats<T>> {
    sh_statistics(primitives, views, stats)
        .into_iter()
        .map(|s| s.color)
        .collect()
}

/// Weighted mean distance between the full color and its band-`q` truncation, `q = 0..3`.
pub fn band_distances<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    stats: &TransmittanceStats<T>,
) -> Vec<[T; 3]> {
    sh_statistics(primitives, views, stats)
        .into_iter()
        .map(|s| s.distances)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandRule {
    /// Color spread below `eps_sigma`: collapsed to the mean color.
    Variance,
    /// Lowest band whose truncation distance is below `eps_cdist`.
    Distance,
    /// No rule fired; band count unchanged.
    Keep,
    /// Not seen by any view: collapsed to band 0.
    Unobserved,
}

impl BandRule {
    pub fn name(self) -> &'static str {
        match self {
            Self::Variance => "variance",
            Self::Distance => "distance",
            Self::Keep => "keep",
            Self::Unobserved => "unobserved",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandChoice<T> {
    pub band: u8,
    pub rule: BandRule,
    pub mean: Vec3<T>,
    /// Spread compared against `eps_sigma` (per [`SigmaMode`]).
    pub sigma: Vec3<T>,
    pub distances: [T; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandAssignment<T> {
    pub choices: Vec<BandChoice<T>>,
}

impl<T: Real> BandAssignment<T> {
    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        for c in &self.choices {
            h[c.band as usize] += 1;
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,band,rule,sigma_r,sigma_g,sigma_b,d0,d1,d2\n");
        for (i, c) in self.choices.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{},{},{},{}",
                c.band,
                c.rule.name(),
                c.sigma[0],
                c.sigma[1],
                c.sigma[2],
                c.distances[0],
                c.distances[1],
                c.distances[2]
            );
        }
        s
    }
}

/// Picks a band count per primitive. Never exceeds the primitive's current band count.
pub fn assign_bands<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    statistics: &[ShStatistics<T>],
    thresholds: &ShThresholds<T>,
    mode: SigmaMode,
) -> BandAssignment<T> {
    let choices = primitives
        .iter()
        .zip(statistics)
        .map(|(p, st)| {
            let sigma = st.color.sigma(mode);
            let current = p.band_count();
            let (band, rule) = if current == 0 {
                (0, BandRule::Keep)
            } else if !st.color.observed {
                (0, BandRule::Unobserved)
            } else if sigma.iter().copied().fold(T::neg_infinity(), T::max) < thresholds.eps_sigma {
                (0, BandRule::Variance)
            } else {
                match (0..current).find(|&q| st.distances[q] < thresholds.eps_cdist) {
                    Some(q) => (q, BandRule::Distance),
                    None => (current, BandRule::Keep),
                }
            };
            BandChoice {
                band: band as u8,
                rule,
                mean: st.color.mean,
                sigma,
                distances: st.distances,
            }
        })
        .collect();
    BandAssignment { choices }
}

/// Applies an assignment: truncates SH groups, and for collapsed primitives
/// replaces the DC color with the mean color.
pub fn apply_bands<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    assignment: &BandAssignment<T>,
) -> Vec<GaussianPrimitive<T>> {
    primitives
        .iter()
        .zip(&assignment.choices)
        .map(|(p, c)| {
            let mut q = p.clone();
            if matches!(c.rule, BandRule::Variance | BandRule::Unobserved) {
                q.base_color = rgb_to_dc(c.mean);
            }
            q.truncate_bands(c.band as usize);
            q
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ShCullConfig<T> {
    pub thresholds: ShThresholds<T>,
    pub sigma_mode: SigmaMode,
    /// Views are downscaled so their larger side is at most this (0 = native).
    pub stats_max_dim: u32,
    pub pixel_mode: PixelCountMode,
    pub render: RenderOptions<T>,
}

impl<T: Real> Default for ShCullConfig<T> {
    fn default() -> Self {
        Self {
            thresholds: ShThresholds::default(),
            sigma_mode: SigmaMode::default(),
            stats_max_dim: 256,
            pixel_mode: PixelCountMode::default(),
            render: RenderOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ShCullSummary {
    pub sh_floats_before: usize,
    pub sh_floats_after: usize,
    pub bands_before: [usize; 4],
    pub bands_after: [usize; 4],
}

pub struct ShCullResult<T> {
    pub primitives: Vec<GaussianPrimitive<T>>,
    pub assignment: BandAssignment<T>,
    pub summary: ShCullSummary,
}

fn sh_floats<T: Real>(p: &[GaussianPrimitive<T>]) -> usize {
    p.iter()
        .map(|x| 3 * crate::scene::sh_groups(x.band_count()))
        .sum()
}

fn histogram<T: Real>(p: &[GaussianPrimitive<T>]) -> [usize; 4] {
    let mut h = [0; 4];
    for x in p {
        h[x.band_count()] += 1;
    }
    h
}

/// Transmittance statistics → color statistics → band assignment → coefficient removal.
pub fn cull_sh<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &ShCullConfig<T>,
) -> ShCullResult<T> {
    let views: Vec<CameraView<T>> = views
        .iter()
        .map(|v| v.downscaled(config.stats_max_dim))
        .collect();
    let stats = transmittance_stats(primitives, &views, &config.render, config.pixel_mode);
    let statistics = sh_statistics(primitives, &views, &stats);
    let assignment = assign_bands(
        primitives,
        &statistics,
        &config.thresholds,
        config.sigma_mode,
    );
    let out = apply_bands(primitives, &assignment);
    let summary = ShCullSummary {
        sh_floats_before: sh_floats(primitives),
        sh_floats_after: sh_floats(&out),
        bands_before: histogram(primitives),
        bands_after: histogram(&out),
    };
    ShCullResult {
        primitives: out,
        assignment,
        summary,
    }
}
