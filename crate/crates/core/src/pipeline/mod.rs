//! End-to-end compression: prune, cull SH bands, quantize, encode, with
//! holdout evaluation after every stage.

pub mod config;
pub mod report;
pub mod synth;

use std::time::Instant;

use rayon::prelude::*;

use crate::error::Result;
use crate::io::compact::{encode_compact, CompactScene};
use crate::io::memory::{memory_report_scene, MemoryReport};
use crate::prune::{prune, PruneSummary, QualityGate};
use crate::quant::{quantize_scene, Quantized};
use crate::raster::{psnr, render, ssim, RenderOptions, RenderedImage};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};
use crate::sh::{cull_sh, BandAssignment, ShCullConfig, ShCullSummary};

pub use config::{parse_config_text, PipelineConfig, Preset};
pub use report::{StageReport, StageRow};
pub use synth::{camera_ring, generate_synthetic, SynthLabels, SynthScene, SynthSpec};

/// What holdout renders are compared against.
#[derive(Clone, Debug)]
pub enum Reference<T> {
    /// The uncompressed input's own renders.
    Input,
    /// Renders of a ground-truth scene.
    Scene(Vec<GaussianPrimitive<T>>),
}

/// Training and holdout views: every `every`-th view (0, every, 2·every, …) is held out.
/// With no holdout, or nothing left to train on, all views are used for both.
pub fn split_views<T: Real>(
    views: &[CameraView<T>],
    every: usize,
) -> (Vec<CameraView<T>>, Vec<CameraView<T>>) {
    if every == 0 {
        return (views.to_vec(), views.to_vec());
    }
    let (hold, train): (Vec<_>, Vec<_>) = views
        .iter()
        .cloned()
        .enumerate()
        .partition(|(i, _)| i % every == 0);
    let hold: Vec<_> = hold.into_iter().map(|x| x.1).collect();
    let train: Vec<_> = train.into_iter().map(|x| x.1).collect();
    if train.is_empty() {
        return (views.to_vec(), hold);
    }
    (train, hold)
}

/// Renders a scene and scores it against fixed reference images.
pub struct Evaluator<T> {
    pub views: Vec<CameraView<T>>,
    pub references: Vec<RenderedImage<T>>,
    pub render: RenderOptions<T>,
    pub reference_kind: &'static str,
}

impl<T: Real> Evaluator<T> {
    pub fn new(
        input: &[GaussianPrimitive<T>],
        views: &[CameraView<T>],
        config: &PipelineConfig,
        reference: &Reference<T>,
    ) -> Self {
        let (_, hold) = split_views(views, config.holdout_every);
        let views: Vec<_> = hold
            .iter()
            .map(|v| v.downscaled(config.eval_max_dim))
            .collect();
        let render_opts = RenderOptions::default();
        let (source, kind) = match reference {
            Reference::Input => (input, "input"),
            Reference::Scene(gt) => (gt.as_slice(), "ground_truth"),
        };
        let references = views
            .par_iter()
            .map(|v| render(source, v, &render_opts))
            .collect();
        Self {
            views,
            references,
            render: render_opts,
            reference_kind: kind,
        }
    }

    /// Mean PSNR and SSIM over the evaluation views.
    pub fn evaluate(&self, primitives: &[GaussianPrimitive<T>]) -> (f64, f64) {
        if self.views.is_empty() {
            return (f64::INFINITY, 1.0);
        }
        let scores: Vec<(f64, f64)> = self
            .views
            .par_iter()
            .zip(&self.references)
            .map(|(v, r)| {
                let img = render(primitives, v, &self.render);
                (psnr(&img, r).as_f64(), ssim(&img, r).as_f64())
            })
            .collect();
        let n = scores.len() as f64;
        (
            scores.iter().map(|s| s.0).sum::<f64>() / n,
            scores.iter().map(|s| s.1).sum::<f64>() / n,
        )
    }

    /// Prune passes must stay above this PSNR.
    pub fn gate_threshold(&self, input_psnr: f64, config: &PipelineConfig) -> f64 {
        if input_psnr.is_finite() {
            input_psnr - config.psnr_budget_db
        } else {
            config.fidelity_floor_db
        }
    }
}

/// Prune stage on the training views, gated on the evaluator's holdout views.
pub fn prune_stage<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PipelineConfig,
    evaluator: &Evaluator<T>,
    input_psnr: f64,
) -> Result<(Vec<GaussianPrimitive<T>>, PruneSummary)> {
    let (train, _) = split_views(views, config.holdout_every);
    let gate = QualityGate {
        views: &evaluator.views,
        references: &evaluator.references,
        min_psnr: evaluator.gate_threshold(input_psnr, config),
        render: evaluator.render.clone(),
    };
    let gate = (config.quality_gate && !evaluator.views.is_empty()).then_some(&gate);
    prune(primitives, &train, &config.prune_config(), gate).map_err(|e| e.in_stage("pruning"))
}

pub fn sh_stage<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PipelineConfig,
) -> (Vec<GaussianPrimitive<T>>, BandAssignment<T>, ShCullSummary) {
    let (train, _) = split_views(views, config.holdout_every);
    let sh = ShCullConfig {
        thresholds: config.sh_thresholds(),
        sigma_mode: config.sigma_mode,
        stats_max_dim: config.stats_max_dim,
        pixel_mode: config.pixel_mode,
        render: RenderOptions::default(),
    };
    let r = cull_sh(primitives, &train, &sh);
    (r.primitives, r.assignment, r.summary)
}

pub fn quantize_stage<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    config: &PipelineConfig,
) -> Result<(Quantized<T>, Vec<u8>)> {
    let q = quantize_scene(primitives, &config.kmeans_config())
        .map_err(|e| e.in_stage("quantization"))?;
    let bytes = encode_compact(&q.compact).map_err(|e| e.in_stage("quantization"))?;
    Ok((q, bytes))
}

pub struct CompressOutput<T> {
    pub bytes: Vec<u8>,
    pub compact: CompactScene,
    pub pruned: Vec<GaussianPrimitive<T>>,
    pub culled: Vec<GaussianPrimitive<T>>,
    /// The compact scene decoded back to primitives.
    pub decoded: Vec<GaussianPrimitive<T>>,
    pub report: StageReport,
    pub prune: PruneSummary,
    pub sh: ShCullSummary,
    pub assignment: BandAssignment<T>,
    pub rescale: Option<f64>,
    pub memory: MemoryReport,
}

/// Runs every stage in order and reports size and holdout quality after each.
pub fn compress<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PipelineConfig,
    reference: &Reference<T>,
) -> Result<CompressOutput<T>> {
    compress_with(primitives, views, config, reference, |_, p| Ok(p))
}

/// [`compress`] with a hook called on the pruned (`"pruned"`) and SH-culled
/// (`"sh_culled"`) scenes; the next stage consumes whatever the hook returns.
pub fn compress_with<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    config: &PipelineConfig,
    reference: &Reference<T>,
    mut checkpoint: impl FnMut(
        &'static str,
        Vec<GaussianPrimitive<T>>,
    ) -> Result<Vec<GaussianPrimitive<T>>>,
) -> Result<CompressOutput<T>> {
    config.validate()?;
    if views.is_empty() {
        return Err(crate::Error::InvalidInput(
            "compression needs at least one view".into(),
        ));
    }
    let n = primitives.len();
    let evaluator = Evaluator::new(primitives, views, config, reference);
    let mut report = StageReport {
        baseline_bytes: memory_report_scene::<T>(&[], n).baseline_bytes,
        reference: evaluator.reference_kind.to_string(),
        eval_views: evaluator.views.len(),
        eval_width: evaluator.views.first().map_or(0, |v| v.width),
        eval_height: evaluator.views.first().map_or(0, |v| v.height),
        ..Default::default()
    };
    let bytes_of = |p: &[GaussianPrimitive<T>]| memory_report_scene(p, n).total_bytes;

    let input_quality = evaluator.evaluate(primitives);
    report.push("input", n, bytes_of(primitives), input_quality, 0.0);

    let t = Instant::now();
    let (pruned, prune_summary) =
        prune_stage(primitives, views, config, &evaluator, input_quality.0)?;
    let pruned = checkpoint("pruned", pruned)?;
    let secs = t.elapsed().as_secs_f64();
    report.push(
        "+pruning",
        pruned.len(),
        bytes_of(&pruned),
        evaluator.evaluate(&pruned),
        secs,
    );

    let t = Instant::now();
    let (culled, assignment, sh_summary) = sh_stage(&pruned, views, config);
    let culled = checkpoint("sh_culled", culled)?;
    let secs = t.elapsed().as_secs_f64();
    report.push(
        "+sh_culling",
        culled.len(),
        bytes_of(&culled),
        evaluator.evaluate(&culled),
        secs,
    );

    let t = Instant::now();
    let (q, bytes) = quantize_stage(&culled, config)?;
    let secs = t.elapsed().as_secs_f64();
    let decoded: Vec<GaussianPrimitive<T>> = q.compact.to_primitives();
    report.push(
        "+quantization",
        decoded.len(),
        bytes.len(),
        evaluator.evaluate(&decoded),
        secs,
    );

    let memory = crate::io::memory::memory_report_compact(&q.compact, n);
    Ok(CompressOutput {
        bytes,
        compact: q.compact,
        pruned,
        culled,
        decoded,
        report,
        prune: prune_summary,
        sh: sh_summary,
        assignment,
        rescale: q.rescale,
        memory,
    })
}
