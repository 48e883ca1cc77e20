//! Redundancy scores from sphere/ellipsoid overlap, and the two culling policies.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::math;
use crate::prune::footprint::{sphere_radius, FootprintTable, RadiusMode};
use crate::prune::knn::knn_all;
use crate::scalar::Real;
use crate::scene::GaussianPrimitive;

/// Whether the ellipsoid of `other`, with every axis grown by `r`, contains `center`.
pub fn intersects<T: Real>(other: &GaussianPrimitive<T>, center: [T; 3], r: T) -> bool {
    let rot = other.rotation_matrix();
    let local = math::mat_t_vec(&rot, math::sub(center, other.position));
    let mut acc = T::zero();
    for d in 0..3 {
        let q = local[d] / (other.scale[d] + r);
        acc = acc + q * q;
    }
    acc <= T::one()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RedundancyScores {
    /// Members of each primitive's region (self included); `None` for invisible primitives.
    pub region_count: Vec<Option<u32>>,
    /// Minimum region count over the regions a primitive belongs to; 1 if none.
    pub final_score: Vec<u32>,
}

/// Ids of the neighbours of `g` that fall inside its region, self included.
fn region<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    g: usize,
    neighbours: &[u32],
    r: T,
) -> Vec<u32> {
    let c = primitives[g].position;
    let mut members = vec![g as u32];
    members.extend(
        neighbours
            .iter()
            .copied()
            .filter(|&j| intersects(&primitives[j as usize], c, r)),
    );
    members
}

/// Region counts and min-propagated scores given explicit candidate lists.
pub fn scores_from_candidates<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    footprints: &FootprintTable<T>,
    candidates: &[Vec<u32>],
    mode: RadiusMode,
) -> RedundancyScores {
    let regions: Vec<Option<Vec<u32>>> = (0..primitives.len())
        .into_par_iter()
        .map(|g| {
            footprints.a_min[g]
                .map(|a| region(primitives, g, &candidates[g], sphere_radius(a, mode)))
        })
        .collect();
    let region_count: Vec<Option<u32>> = regions
        .iter()
        .map(|r| r.as_ref().map(|m| m.len() as u32))
        .collect();
    let mut best = vec![u32::MAX; primitives.len()];
    for members in regions.iter().flatten() {
        let count = members.len() as u32;
        for &j in members {
            let b = &mut best[j as usize];
            *b = (*b).min(count);
        }
    }
    let final_score = best
        .into_iter()
        .map(|b| if b == u32::MAX { 1 } else { b })
        .collect();
    RedundancyScores {
        region_count,
        final_score,
    }
}

/// Scores with candidates drawn from the `k` nearest centers (clamped to `n - 1`).
pub fn redundancy_scores<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    footprints: &FootprintTable<T>,
    k: usize,
    mode: RadiusMode,
) -> RedundancyScores {
    let centers: Vec<[T; 3]> = primitives.iter().map(|p| p.position).collect();
    let candidates = knn_all(&centers, k);
    scores_from_candidates(primitives, footprints, &candidates, mode)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RedundancyReport {
    pub region_count: Vec<Option<u32>>,
    pub final_score: Vec<u32>,
    pub visible: Vec<bool>,
    pub candidate: Vec<bool>,
    pub culled: Vec<bool>,
    /// Mean and population standard deviation of `final_score` over visible primitives.
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: f64,
}

impl RedundancyReport {
    pub fn candidate_count(&self) -> usize {
        self.candidate.iter().filter(|&&c| c).count()
    }

    pub fn culled_ids(&self) -> Vec<usize> {
        (0..self.culled.len()).filter(|&i| self.culled[i]).collect()
    }

    /// Count of visible primitives per final score.
    pub fn histogram(&self) -> BTreeMap<u32, usize> {
        let mut h = BTreeMap::new();
        for (s, v) in self.final_score.iter().zip(&self.visible) {
            if *v {
                *h.entry(*s).or_insert(0) += 1;
            }
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RedundancyCullConfig {
    pub lambda: f64,
    pub score_floor: f64,
    pub fraction: f64,
}

impl Default for RedundancyCullConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            score_floor: 3.0,
            fraction: 0.5,
        }
    }
}

/// Ids sorted by ascending opacity, then id.
fn by_opacity<T: Real>(primitives: &[GaussianPrimitive<T>], ids: &mut [usize]) {
    ids.sort_by(|&a, &b| {
        primitives[a]
            .opacity
            .as_f64()
            .total_cmp(&primitives[b].opacity.as_f64())
            .then(a.cmp(&b))
    });
}

/// Candidates are visible primitives with `final_score > max(μ + λσ, floor)`;
/// the lowest-opacity `⌊fraction·|candidates|⌋` of them are culled.
pub fn redundancy_cull<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    footprints: &FootprintTable<T>,
    scores: RedundancyScores,
    config: &RedundancyCullConfig,
) -> RedundancyReport {
    let n = primitives.len();
    let visible: Vec<bool> = (0..n).map(|i| footprints.is_visible(i)).collect();
    let vis: Vec<f64> = (0..n)
        .filter(|&i| visible[i])
        .map(|i| scores.final_score[i] as f64)
        .collect();
    let (mean, std_dev) = if vis.is_empty() {
        (0.0, 0.0)
    } else {
        let m = vis.iter().sum::<f64>() / vis.len() as f64;
        let var = vis.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / vis.len() as f64;
        (m, var.sqrt())
    };
    let threshold = (mean + config.lambda * std_dev).max(config.score_floor);
    let candidate: Vec<bool> = (0..n)
        .map(|i| visible[i] && scores.final_score[i] as f64 > threshold)
        .collect();
    let mut ids: Vec<usize> = (0..n).filter(|&i| candidate[i]).collect();
    by_opacity(primitives, &mut ids);
    let take = (ids.len() as f64 * config.fraction).floor() as usize;
    let mut culled = vec![false; n];
    for &i in &ids[..take.min(ids.len())] {
        culled[i] = true;
    }
    RedundancyReport {
        region_count: scores.region_count,
        final_score: scores.final_score,
        visible,
        candidate,
        culled,
        mean,
        std_dev,
        threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpacityCullConfig {
    pub fraction: f64,
    /// Primitives above this opacity are never taken by the fractional budget.
    pub cap: f64,
    /// Primitives below this opacity are always culled.
    pub floor: f64,
}

impl Default for OpacityCullConfig {
    fn default() -> Self {
        Self {
            fraction: 0.03,
            cap: 0.05,
            floor: 1.0 / 255.0,
        }
    }
}

/// Sorted ids: the lowest-opacity `⌊fraction·n⌋` primitives at or below `cap`,
/// plus every primitive below `floor`.
pub fn opacity_cull<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    config: &OpacityCullConfig,
) -> Vec<usize> {
    let n = primitives.len();
    let mut ids: Vec<usize> = (0..n).collect();
    by_opacity(primitives, &mut ids);
    let budget = (n as f64 * config.fraction).floor() as usize;
    let mut out: Vec<usize> = ids
        .iter()
        .take(budget)
        .copied()
        .filter(|&i| primitives[i].opacity.as_f64() <= config.cap)
        .collect();
    out.extend(
        ids.iter()
            .skip(budget)
            .copied()
            .filter(|&i| primitives[i].opacity.as_f64() < config.floor),
    );
    out.sort_unstable();
    out
}
