mod common;

use common::*;
use rand::Rng;
use splatpress::io::memory_report_scene;
use splatpress::pipeline::{
    camera_ring, compress, generate_synthetic, prune_stage, sh_stage, split_views, Evaluator,
    PipelineConfig, Reference, SynthSpec,
};
use splatpress::quant::half::round_half;

fn small(seed: u64, redundancy: f64) -> SynthSpec {
    SynthSpec {
        primitives: 12_000,
        redundancy,
        resolution: 128,
        seed,
        ..SynthSpec::default()
    }
}

fn fast_config() -> PipelineConfig {
    PipelineConfig {
        eval_max_dim: 96,
        stats_max_dim: 128,
        ..PipelineConfig::default()
    }
}

#[test]
fn identity_config_returns_half_rounded_input() {
    let mut r = rng(2);
    let levels: Vec<f64> = (0..200)
        .map(|i| round_half(-1.0 + 0.01 * f64::from(i)))
        .collect();
    let rotations = [
        [1.0, 0.0, 0.0, 0.0],
        [0.5, 0.5, 0.5, 0.5],
        [0.0, 1.0, 0.0, 0.0],
        [0.5, -0.5, 0.5, -0.5],
    ];
    let mut prims: Vec<P> = (0..400)
        .map(|i| {
            let mut p = random_prim(&mut r, i % 4, 0.3);
            p.position = p.position.map(|v| v * 1.2345);
            p.scale = [0; 3].map(|_| levels[r.random_range(0..levels.len())].abs() * 0.04 + 0.005);
            p.rotation = rotations[i % 4];
            p.opacity = levels[r.random_range(0..levels.len())].abs() * 0.3 + 0.01;
            p.base_color = [0; 3].map(|_| levels[r.random_range(0..levels.len())]);
            for g in &mut p.sh_rest {
                *g = [0; 3].map(|_| levels[r.random_range(0..levels.len())] * 0.2);
            }
            p
        })
        .collect();
    prims.sort_by_key(|p| p.band_count());
    let views = camera_ring::<f64>(&SynthSpec {
        cameras: 16,
        resolution: 128,
        ..SynthSpec::default()
    });
    let config = PipelineConfig::from_pairs([
        ("prune_passes", "0"),
        ("eps_sigma", "0"),
        ("eps_cdist", "0"),
    ])
    .unwrap();
    let out = compress(&prims, &views, &config, &Reference::Input).unwrap();
    assert_eq!(out.decoded.len(), prims.len());
    for (a, b) in prims.iter().zip(&out.decoded) {
        assert_eq!(b.position, a.position.map(round_half));
        assert_eq!(b.scale, a.scale.map(round_half));
        assert_eq!(b.rotation, a.rotation);
        assert_eq!(b.opacity, round_half(a.opacity));
        let dc = a.base_color.map(round_half);
        assert_eq!(b.base_color, dc);
        let rest: Vec<[f64; 3]> = a.sh_rest.iter().map(|g| g.map(round_half)).collect();
        assert_eq!(b.sh_rest, rest);
    }
}

#[test]
fn compression_is_deterministic() {
    let s = generate_synthetic::<f64>(&small(4, 3.0));
    let cfg = fast_config();
    let a = compress(&s.scene.primitives, &s.scene.views, &cfg, &Reference::Input).unwrap();
    let b = compress(&s.scene.primitives, &s.scene.views, &cfg, &Reference::Input).unwrap();
    assert_eq!(a.bytes, b.bytes);
    assert_eq!(a.prune, b.prune);
}

#[test]
fn view_dependent_sites_keep_their_bands() {
    let s = generate_synthetic::<f64>(&SynthSpec {
        primitives: 20_000,
        redundancy: 1.0,
        resolution: 128,
        seed: 6,
        ..SynthSpec::default()
    });
    let (_, assignment, _) = sh_stage(&s.scene.primitives, &s.scene.views, &fast_config());
    let vd: Vec<usize> = (0..s.scene.len())
        .filter(|&i| s.labels.view_dependent[i])
        .collect();
    assert!(vd.len() > 1000);
    let kept = vd
        .iter()
        .filter(|&&i| assignment.choices[i].band > 0)
        .count();
    let recall = kept as f64 / vd.len() as f64;
    assert!(recall >= 0.9, "recall {recall}");
    let diffuse_kept = (0..s.scene.len())
        .filter(|&i| !s.labels.view_dependent[i] && assignment.choices[i].band > 0)
        .count();
    assert!(
        diffuse_kept * 10 < s.scene.len(),
        "{diffuse_kept} diffuse primitives kept bands"
    );
}

#[test]
fn scene_without_duplicates_is_barely_pruned() {
    let s = generate_synthetic::<f64>(&small(8, 1.0));
    let cfg = fast_config();
    let evaluator = Evaluator::new(&s.scene.primitives, &s.scene.views, &cfg, &Reference::Input);
    let (out, summary) = prune_stage(
        &s.scene.primitives,
        &s.scene.views,
        &cfg,
        &evaluator,
        f64::INFINITY,
    )
    .unwrap();
    let removed = s.scene.len() - out.len();
    // adjacent lattice sites overlap a little, so a handful of primitives still score above the floor
    assert!(
        removed * 50 <= s.scene.len(),
        "removed {removed} of {}",
        s.scene.len()
    );
    assert_eq!(summary.removed(), removed);
}

#[test]
fn duplicates_are_what_gets_pruned() {
    let s = generate_synthetic::<f64>(&small(9, 4.0));
    let cfg = fast_config();
    let evaluator = Evaluator::new(&s.scene.primitives, &s.scene.views, &cfg, &Reference::Input);
    let (out, _) = prune_stage(
        &s.scene.primitives,
        &s.scene.views,
        &cfg,
        &evaluator,
        f64::INFINITY,
    )
    .unwrap();
    assert!(
        out.len() * 10 < s.scene.len() * 9,
        "{} of {}",
        out.len(),
        s.scene.len()
    );
}

#[test]
fn report_gains_multiply_and_stages_stay_above_floor() {
    let s = generate_synthetic::<f64>(&small(10, 4.0));
    let out = compress(
        &s.scene.primitives,
        &s.scene.views,
        &fast_config(),
        &Reference::Input,
    )
    .unwrap();
    let rep = &out.report;
    assert_eq!(rep.rows.len(), 4);
    let product: f64 = rep.rows.iter().map(|r| r.step_gain).product();
    let input_gain = rep.rows[0].gain;
    assert!((product * input_gain / rep.total_gain() - 1.0).abs() < 1e-3);
    assert_eq!(rep.last().bytes, out.bytes.len());
    assert_eq!(out.memory.total_bytes, out.bytes.len());
    assert_eq!(
        rep.rows[1].bytes,
        memory_report_scene(&out.pruned, s.scene.len()).total_bytes
    );
    assert!(rep.rows[0].psnr.is_infinite());
    for row in &rep.rows[1..] {
        assert!(row.psnr >= 35.0, "{}: {} dB", row.stage, row.psnr);
    }
    let (_, hold) = split_views(&s.scene.views, 8);
    assert_eq!(rep.eval_views, hold.len());
}

#[test]
fn invalid_inputs_name_the_stage() {
    let s = generate_synthetic::<f64>(&small(1, 2.0));
    assert!(compress(&s.scene.primitives, &[], &fast_config(), &Reference::Input).is_err());
    let mut prims = s.scene.primitives.clone();
    prims[3].opacity = f64::NAN;
    let err = compress(&prims, &s.scene.views, &fast_config(), &Reference::Input)
        .err()
        .unwrap();
    assert!(
        err.to_string().contains("quantization") || err.to_string().contains("pruning"),
        "{err}"
    );
}
