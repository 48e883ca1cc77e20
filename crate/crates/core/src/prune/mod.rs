//! Resolution-aware redundancy pruning and low-opacity culling.

pub mod footprint;
pub mod knn;
pub mod redundancy;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::raster::{psnr, render, RenderOptions, RenderedImage};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};

pub use footprint::{
    compute_footprints, pixel_footprint, sphere_radius, FootprintTable, RadiusMode,
};
pub use knn::{knn_all, HashGrid};
pub use redundancy::{
    intersects, opacity_cull, redundancy_cull, redundancy_scores, scores_from_candidates,
    OpacityCullConfig, RedundancyCullConfig, RedundancyReport, RedundancyScores,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PruneConfig {
    pub neighbours: usize,
    pub radius_mode: RadiusMode,
    pub redundancy: RedundancyCullConfig,
    pub opacity: OpacityCullConfig,
    /// Camera depth below which a view does not observe a primitive.
    pub near: f64,
    pub passes: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            neighbours: 30,
            radius_mode: RadiusMode::Length,
            redundancy: RedundancyCullConfig::default(),
            opacity: OpacityCullConfig::default(),
            near: 0.2,
            passes: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PassSummary {
    pub pass: usize,
    pub input: usize,
    pub invisible: usize,
    pub opacity_culled: usize,
    pub candidates: usize,
    pub redundancy_culled: usize,
    /// Primitives selected by both policies.
    pub overlap: usize,
    pub removed: usize,
    pub output: usize,
    pub score_mean: f64,
    pub score_std_dev: f64,
    pub threshold: f64,
    pub score_histogram: BTreeMap<u32, usize>,
    /// Mean holdout PSNR after the pass, when gated.
    pub psnr: Option<f64>,
    pub rolled_back: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PruneSummary {
    pub passes: Vec<PassSummary>,
}

impl PruneSummary {
    pub fn removed(&self) -> usize {
        self.passes
            .iter()
            .filter(|p| !p.rolled_back)
            .map(|p| p.removed)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "pass,input,invisible,opacity_culled,candidates,redundancy_culled,overlap,removed,output,score_mean,score_std_dev,threshold,psnr,rolled_back,score_histogram\n",
        );
        for p in &self.passes {
            let hist: Vec<String> = p
                .score_histogram
                .iter()
                .map(|(k, v)| format!("{k}:{v}"))
                .collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.pass,
                p.input,
                p.invisible,
                p.opacity_culled,
                p.candidates,
                p.redundancy_culled,
                p.overlap,
                p.removed,
                p.output,
                p.score_mean,
                p.score_std_dev,
                p.threshold,
                p.psnr.map(|v| v.to_string()).unwrap_or_default(),
                p.rolled_back,
                hist.join(";")
            );
        }
        s
    }
}

pub struct PassResult<T> {
    pub primitives: Vec<GaussianPrimitive<T>>,
    pub summary: PassSummary,
    pub report: RedundancyReport,
    pub opacity_culled: Vec<usize>,
}

/// One pass: the union of the opacity and redundancy cull sets is removed once.
pub fn prune_pass<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PruneConfig,
) -> Result<PassResult<T>> {
    if let Some(i) = primitives
        .iter()
        .position(|p| !p.opacity.is_finite() || p.position.iter().any(|v| !v.is_finite()))
    {
        return Err(crate::Error::NonFinite(format!(
            "opacity or position of primitive {i}"
        )));
    }
    let footprints = compute_footprints(primitives, views, T::lit(config.near))?;
    let scores = redundancy_scores(
        primitives,
        &footprints,
        config.neighbours,
        config.radius_mode,
    );
    let report = redundancy_cull(primitives, &footprints, scores, &config.redundancy);
    let by_opacity = opacity_cull(primitives, &config.opacity);
    let mut remove = report.culled.clone();
    let mut overlap = 0;
    for &i in &by_opacity {
        if remove[i] {
            overlap += 1;
        }
        remove[i] = true;
    }
    let kept: Vec<GaussianPrimitive<T>> = primitives
        .iter()
        .zip(&remove)
        .filter(|(_, r)| !**r)
        .map(|(p, _)| p.clone())
        .collect();
    let summary = PassSummary {
        pass: 0,
        input: primitives.len(),
        invisible: footprints.invisible_count(),
        opacity_culled: by_opacity.len(),
        candidates: report.candidate_count(),
        redundancy_culled: report.culled.iter().filter(|&&c| c).count(),
        overlap,
        removed: primitives.len() - kept.len(),
        output: kept.len(),
        score_mean: report.mean,
        score_std_dev: report.std_dev,
        threshold: report.threshold,
        score_histogram: report.histogram(),
        psnr: None,
        rolled_back: false,
    };
    Ok(PassResult {
        primitives: kept,
        summary,
        report,
        opacity_culled: by_opacity,
    })
}

/// Rejects a pass whose mean PSNR against `references` falls below `min_psnr`.
pub struct QualityGate<'a, T> {
    pub views: &'a [CameraView<T>],
    pub references: &'a [RenderedImage<T>],
    pub min_psnr: f64,
    pub render: RenderOptions<T>,
}

impl<T: Real> QualityGate<'_, T> {
    pub fn mean_psnr(&self, primitives: &[GaussianPrimitive<T>]) -> f64 {
        mean_psnr(primitives, self.views, self.references, &self.render)
    }
}

/// Mean over views of per-view PSNR; infinite when every view matches exactly.
pub fn mean_psnr<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    references: &[RenderedImage<T>],
    opts: &RenderOptions<T>,
) -> f64 {
    if views.is_empty() {
        return f64::INFINITY;
    }
    let total: f64 = views
        .iter()
        .zip(references)
        .map(|(v, r)| psnr(&render(primitives, v, opts), r).as_f64())
        .sum();
    total / views.len() as f64
}

/// Up to `config.passes` passes; stops early when a pass removes nothing or is rolled back.
pub fn prune<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PruneConfig,
    gate: Option<&QualityGate<'_, T>>,
) -> Result<(Vec<GaussianPrimitive<T>>, PruneSummary)> {
    let mut current = primitives.to_vec();
    let mut summary = PruneSummary::default();
    for pass in 0..config.passes {
        let mut r = prune_pass(&current, views, config)?;
        r.summary.pass = pass + 1;
        if r.summary.removed == 0 {
            summary.passes.push(r.summary);
            break;
        }
        if let Some(g) = gate {
            let q = g.mean_psnr(&r.primitives);
            r.summary.psnr = Some(q);
            if q < g.min_psnr {
                r.summary.rolled_back = true;
                summary.passes.push(r.summary);
                break;
            }
        }
        summary.passes.push(r.summary);
        current = r.primitives;
    }
    Ok((current, summary))
}
