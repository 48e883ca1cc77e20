//! `splatpress` command line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use splatpress::io::{
    decode_compact, encode_ply, memory_report_compact, memory_report_scene, parse_compact,
    parse_ply, read_cameras, rig_to_json, write_3dgs_ply, MemoryReport,
};
use splatpress::pipeline::{
    compress_with, generate_synthetic, parse_config_text, prune_stage, quantize_stage, sh_stage,
    Evaluator, PipelineConfig, Reference, SynthSpec,
};
use splatpress::quant::AttributeGroup;
use splatpress::raster::png::write_png;
use splatpress::raster::{render, RenderOptions};
use splatpress::{CameraView, GaussianPrimitive};

type Prim = GaussianPrimitive<f64>;

#[derive(Parser)]
#[command(
    name = "splatpress",
    version,
    about = "Compress 3D Gaussian splatting scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune, cull SH bands and quantize into a compact `.rgs` file.
    Compress {
        scene: PathBuf,
        cameras: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        reference: ReferenceArgs,
        /// Stage report as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Stage report as JSON.
        #[arg(long)]
        report_json: Option<PathBuf>,
        /// Directory for the intermediate `pruned.ply` and `sh_culled.ply`.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Redundancy and low-opacity pruning.
    Prune {
        scene: PathBuf,
        cameras: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        reference: ReferenceArgs,
        /// Per-pass summary as CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Per-primitive SH band selection.
    CullSh {
        scene: PathBuf,
        cameras: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Per-primitive band assignment as CSV.
        #[arg(long)]
        assignment: Option<PathBuf>,
    },
    /// Codebook quantization of a PLY scene into `.rgs`.
    Quantize {
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Expand a `.rgs` file into a 3DGS PLY.
    Decompress {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render views of a `.ply` or `.rgs` scene to PNG.
    Render {
        scene: PathBuf,
        cameras: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Only this view index.
        #[arg(long)]
        view: Option<usize>,
        /// Longest image side (0 = native).
        #[arg(long, default_value_t = 0)]
        max_dim: u32,
    },
    /// Byte breakdown of a `.ply` or `.rgs` scene.
    Stats {
        input: PathBuf,
        /// Primitive count of the 59-float reference (defaults to the scene's count).
        #[arg(long)]
        baseline: Option<usize>,
        /// Also list the codebooks of a `.rgs` file.
        #[arg(long)]
        codebooks: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic test scene, its ground truth and a camera rig.
    Synth {
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        primitives: usize,
        #[arg(long, default_value_t = 4.0)]
        redundancy: f64,
        #[arg(long, default_value_t = 0.1)]
        view_dependent: f64,
        #[arg(long, default_value_t = 24)]
        cameras: usize,
        #[arg(long, default_value_t = 256)]
        resolution: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Default)]
struct ReferenceArgs {
    /// Ground-truth scene for quality measurements (defaults to the input itself).
    #[arg(long)]
    reference: Option<PathBuf>,
}

/// Every config-file key is also a flag; flags override the file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["default", "low", "high"])]
    preset: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    score_floor: Option<String>,
    #[arg(long)]
    eps_sigma: Option<String>,
    #[arg(long)]
    eps_cdist: Option<String>,
    #[arg(long)]
    prune_passes: Option<String>,
    #[arg(long)]
    neighbours: Option<String>,
    #[arg(long)]
    cull_fraction: Option<String>,
    #[arg(long)]
    opacity_fraction: Option<String>,
    #[arg(long)]
    opacity_cap: Option<String>,
    #[arg(long)]
    eval_max_dim: Option<String>,
    #[arg(long)]
    stats_max_dim: Option<String>,
    #[arg(long)]
    holdout_every: Option<String>,
    #[arg(long)]
    psnr_budget_db: Option<String>,
    #[arg(long)]
    fidelity_floor_db: Option<String>,
    #[arg(long)]
    quality_gate: Option<String>,
    #[arg(long)]
    kmeans_k: Option<String>,
    #[arg(long)]
    kmeans_iterations: Option<String>,
    #[arg(long)]
    sigma_mode: Option<String>,
    #[arg(long)]
    pixel_mode: Option<String>,
    #[arg(long)]
    radius_mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn flags(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("preset", &self.preset),
            ("lambda", &self.lambda),
            ("score_floor", &self.score_floor),
            ("eps_sigma", &self.eps_sigma),
            ("eps_cdist", &self.eps_cdist),
            ("prune_passes", &self.prune_passes),
            ("neighbours", &self.neighbours),
            ("cull_fraction", &self.cull_fraction),
            ("opacity_fraction", &self.opacity_fraction),
            ("opacity_cap", &self.opacity_cap),
            ("eval_max_dim", &self.eval_max_dim),
            ("stats_max_dim", &self.stats_max_dim),
            ("holdout_every", &self.holdout_every),
            ("psnr_budget_db", &self.psnr_budget_db),
            ("fidelity_floor_db", &self.fidelity_floor_db),
            ("quality_gate", &self.quality_gate),
            ("kmeans_k", &self.kmeans_k),
            ("kmeans_iterations", &self.kmeans_iterations),
            ("sigma_mode", &self.sigma_mode),
            ("pixel_mode", &self.pixel_mode),
            ("radius_mode", &self.radius_mode),
            ("seed", &self.seed),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    fn resolve(&self) -> Result<PipelineConfig> {
        let file = match &self.config {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_config_text(&text)?
            }
            None => Vec::new(),
        };
        let mut pairs: Vec<(&str, &str)> =
            file.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        pairs.extend(self.flags());
        Ok(PipelineConfig::from_pairs(pairs)?)
    }
}

fn read_scene(path: &Path) -> Result<Vec<Prim>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "rgs") {
        Ok(decode_compact(&bytes)?)
    } else {
        Ok(parse_ply(&bytes)?)
    }
}

/// Round-trips a scene through the PLY encoding so in-process stages see
/// exactly what a stage reading the checkpoint file would.
fn checkpoint(primitives: &[Prim], path: Option<&Path>) -> Result<Vec<Prim>> {
    let (bytes, _) = encode_ply(primitives)?;
    if let Some(p) = path {
        fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(parse_ply(&bytes)?)
}

fn reference(args: &ReferenceArgs) -> Result<Reference<f64>> {
    Ok(match &args.reference {
        Some(p) => Reference::Scene(read_scene(p)?),
        None => Reference::Input,
    })
}

fn views(path: &Path) -> Result<Vec<CameraView<f64>>> {
    Ok(read_cameras(path)?)
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).with_context(|| format!("writing {}", path.display()))
}

fn print_memory(r: &MemoryReport, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(r).expect("report serializes")
        );
        return;
    }
    println!(
        "primitives {} (bands 0..3: {:?})",
        r.primitives, r.band_counts
    );
    for (k, v) in r.rows() {
        println!("{k:<10} {v:>14}");
    }
    println!("{:<10} {:>14}", "baseline", r.baseline_bytes);
    println!("{:<10} {:>13.3}x", "gain", r.gain);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress {
            scene,
            cameras,
            output,
            config,
            reference: reference_args,
            report,
            report_json,
            checkpoints,
        } => {
            let cfg = config.resolve()?;
            let input = read_scene(&scene)?;
            let views = views(&cameras)?;
            if views.is_empty() {
                bail!("camera rig has no views");
            }
            let reference = reference(&reference_args)?;
            if let Some(dir) = &checkpoints {
                fs::create_dir_all(dir)?;
            }
            let out = compress_with(&input, &views, &cfg, &reference, |stage, p| {
                let path = checkpoints.as_ref().map(|d| d.join(format!("{stage}.ply")));
                checkpoint(&p, path.as_deref()).map_err(|e| {
                    match e.downcast::<splatpress::Error>() {
                        Ok(e) => e,
                        Err(e) => splatpress::Error::InvalidInput(format!("{e:#}")),
                    }
                })
            })?;
            let (bytes, rep) = (out.bytes, out.report);
            write(&output, &bytes)?;
            if let Some(p) = report {
                write(&p, rep.to_csv())?;
            }
            if let Some(p) = report_json {
                write(&p, rep.to_json())?;
            }
            print!("{}", rep.to_table());
        }
        Command::Prune {
            scene,
            cameras,
            output,
            config,
            reference: reference_args,
            summary,
        } => {
            let cfg = config.resolve()?;
            let input = read_scene(&scene)?;
            let views = views(&cameras)?;
            let reference = reference(&reference_args)?;
            let evaluator = Evaluator::new(&input, &views, &cfg, &reference);
            let q_in = evaluator.evaluate(&input);
            let (pruned, s) = prune_stage(&input, &views, &cfg, &evaluator, q_in.0)?;
            write_3dgs_ply(&output, &pruned)?;
            if let Some(p) = summary {
                write(&p, s.to_csv())?;
            }
            println!(
                "{} -> {} primitives over {} passes",
                input.len(),
                pruned.len(),
                s.passes.len()
            );
        }
        Command::CullSh {
            scene,
            cameras,
            output,
            config,
            assignment,
        } => {
            let cfg = config.resolve()?;
            let input = read_scene(&scene)?;
            let views = views(&cameras)?;
            let (culled, a, s) = sh_stage(&input, &views, &cfg);
            write_3dgs_ply(&output, &culled)?;
            if let Some(p) = assignment {
                write(&p, a.to_csv())?;
            }
            println!(
                "bands {:?} -> {:?}, sh floats {} -> {}",
                s.bands_before, s.bands_after, s.sh_floats_before, s.sh_floats_after
            );
        }
        Command::Quantize {
            scene,
            output,
            config,
        } => {
            let cfg = config.resolve()?;
            let input = read_scene(&scene)?;
            let (q, bytes) = quantize_stage(&input, &cfg)?;
            write(&output, &bytes)?;
            if let Some(f) = q.rescale {
                println!("positions and scales divided by {f}");
            }
            println!("{} primitives, {} bytes", input.len(), bytes.len());
        }
        Command::Decompress { input, output } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let prims: Vec<Prim> = decode_compact(&bytes)?;
            let r = write_3dgs_ply(&output, &prims)?;
            println!("{} primitives", r.primitives);
        }
        Command::Render {
            scene,
            cameras,
            output,
            view,
            max_dim,
        } => {
            let prims = read_scene(&scene)?;
            let views = views(&cameras)?;
            fs::create_dir_all(&output)?;
            let ids: Vec<usize> = match view {
                Some(i) if i < views.len() => vec![i],
                Some(i) => bail!("view {i} out of range (rig has {})", views.len()),
                None => (0..views.len()).collect(),
            };
            let opts = RenderOptions::default();
            for i in ids {
                let img = render(&prims, &views[i].downscaled(max_dim), &opts);
                write_png(&img, output.join(format!("view_{i:04}.png")))?;
            }
        }
        Command::Stats {
            input,
            baseline,
            codebooks,
            json,
        } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            if input.extension().is_some_and(|e| e == "rgs") {
                let c = parse_compact(&bytes)?;
                let r = memory_report_compact(&c, baseline.unwrap_or(c.primitive_count()));
                print_memory(&r, json);
                if codebooks {
                    for (i, book) in c.codebooks.iter().enumerate() {
                        let lo = book
                            .iter()
                            .map(|h| h.to_f64())
                            .fold(f64::INFINITY, f64::min);
                        let hi = book
                            .iter()
                            .map(|h| h.to_f64())
                            .fold(f64::NEG_INFINITY, f64::max);
                        println!(
                            "{:<14} {:>4} entries  [{lo:.6}, {hi:.6}]",
                            AttributeGroup::from_index(i).name(),
                            book.len()
                        );
                    }
                }
            } else {
                let prims: Vec<Prim> = parse_ply(&bytes)?;
                let r = memory_report_scene(&prims, baseline.unwrap_or(prims.len()));
                print_memory(&r, json);
            }
        }
        Command::Synth {
            output,
            primitives,
            redundancy,
            view_dependent,
            cameras,
            resolution,
            seed,
        } => {
            let spec = SynthSpec {
                primitives,
                redundancy,
                view_dependent_fraction: view_dependent,
                cameras,
                resolution,
                seed,
                ..SynthSpec::default()
            };
            let s = generate_synthetic::<f64>(&spec);
            fs::create_dir_all(&output)?;
            write_3dgs_ply(output.join("scene.ply"), &s.scene.primitives)?;
            write_3dgs_ply(output.join("ground_truth.ply"), &s.ground_truth)?;
            write(&output.join("cameras.json"), rig_to_json(&s.scene.views))?;
            let mut labels = String::from("id,site,duplicate,view_dependent\n");
            for i in 0..s.scene.len() {
                labels.push_str(&format!(
                    "{i},{},{},{}\n",
                    s.labels.site[i], s.labels.duplicate[i], s.labels.view_dependent[i]
                ));
            }
            write(&output.join("labels.csv"), labels)?;
            println!(
                "{} primitives, {} sites, {} views",
                s.scene.len(),
                s.ground_truth.len(),
                s.scene.views.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<splatpress::Error>()
                .map_or("cli", |x| x.kind());
            let stage = match e.downcast_ref::<splatpress::Error>() {
                Some(splatpress::Error::Stage { stage, .. }) => Some(*stage),
                _ => None,
            };
            let msg = serde_json::json!({
                "error": { "kind": kind, "stage": stage, "message": format!("{e:#}") }
            });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
