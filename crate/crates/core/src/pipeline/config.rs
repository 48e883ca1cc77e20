//! Pipeline configuration, presets and the flat `key = value` config format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prune::{PruneConfig, RadiusMode};
use crate::quant::KMeansConfig;
use crate::raster::PixelCountMode;
use crate::sh::{ShThresholds, SigmaMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preset {
    #[default]
    Default,
    Low,
    High,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected default, low or high)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Default => "default",
            Self::Low => "low",
            Self::High => "high",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub lambda: f64,
    pub score_floor: f64,
    pub eps_sigma: f64,
    pub eps_cdist: f64,
    pub prune_passes: usize,
    pub neighbours: usize,
    pub cull_fraction: f64,
    pub opacity_fraction: f64,
    pub opacity_cap: f64,
    /// Longest side of holdout renders (0 = native).
    pub eval_max_dim: u32,
    /// Longest side of the views used for SH statistics (0 = native).
    pub stats_max_dim: u32,
    /// Every n-th view is held out for evaluation (0 = none).
    pub holdout_every: usize,
    /// Largest accepted PSNR loss of a prune pass against ground truth.
    pub psnr_budget_db: f64,
    /// Minimum PSNR of a prune pass against the input's own render.
    pub fidelity_floor_db: f64,
    pub quality_gate: bool,
    pub kmeans_k: usize,
    pub kmeans_iterations: usize,
    pub sigma_mode: SigmaMode,
    pub pixel_mode: PixelCountMode,
    pub radius_mode: RadiusMode,
    /// Seeds the synthetic scene generator.
    pub seed: u64,
}

fn sigma_mode_name(m: SigmaMode) -> &'static str {
    match m {
        SigmaMode::StdDev => "std_dev",
        SigmaMode::Variance => "variance",
    }
}

fn pixel_mode_name(m: PixelCountMode) -> &'static str {
    match m {
        PixelCountMode::Contributed => "contributed",
        PixelCountMode::Overlap => "overlap",
    }
}

fn radius_mode_name(m: RadiusMode) -> &'static str {
    match m {
        RadiusMode::Length => "length",
        RadiusMode::Area => "area",
    }
}

fn unknown(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value `{value}` for `{key}`"))
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Default,
            lambda: 1.0,
            score_floor: 3.0,
            eps_sigma: 0.04,
            eps_cdist: 0.04,
            prune_passes: 3,
            neighbours: 30,
            cull_fraction: 0.5,
            opacity_fraction: 0.03,
            opacity_cap: 0.05,
            eval_max_dim: 256,
            stats_max_dim: 256,
            holdout_every: 8,
            psnr_budget_db: 0.5,
            fidelity_floor_db: 35.0,
            quality_gate: true,
            kmeans_k: 256,
            kmeans_iterations: 50,
            sigma_mode: SigmaMode::StdDev,
            pixel_mode: PixelCountMode::Contributed,
            radius_mode: RadiusMode::Length,
            seed: 0,
        }
    }
}

fn parse_num<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value.parse().map_err(|_| unknown(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(unknown(key, value)),
    }
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut c = Self::default();
        c.apply_preset(preset);
        c
    }

    /// Overwrites the preset-controlled thresholds.
    pub fn apply_preset(&mut self, preset: Preset) {
        self.preset = preset;
        let (s, d, floor) = match preset {
            Preset::Default => (0.04, 0.04, 3.0),
            Preset::Low => (0.01, 0.0068, 3.0),
            Preset::High => (0.06, 0.054, 2.0),
        };
        self.eps_sigma = s;
        self.eps_cdist = d;
        self.score_floor = floor;
    }

    pub const KEYS: [&'static str; 22] = [
        "preset",
        "lambda",
        "score_floor",
        "eps_sigma",
        "eps_cdist",
        "prune_passes",
        "neighbours",
        "cull_fraction",
        "opacity_fraction",
        "opacity_cap",
        "eval_max_dim",
        "stats_max_dim",
        "holdout_every",
        "psnr_budget_db",
        "fidelity_floor_db",
        "quality_gate",
        "kmeans_k",
        "kmeans_iterations",
        "sigma_mode",
        "pixel_mode",
        "radius_mode",
        "seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "preset" => self.apply_preset(value.parse()?),
            "lambda" => self.lambda = parse_num(key, value)?,
            "score_floor" => self.score_floor = parse_num(key, value)?,
            "eps_sigma" => self.eps_sigma = parse_num(key, value)?,
            "eps_cdist" => self.eps_cdist = parse_num(key, value)?,
            "prune_passes" => self.prune_passes = parse_num(key, value)?,
            "neighbours" => self.neighbours = parse_num(key, value)?,
            "cull_fraction" => self.cull_fraction = parse_num(key, value)?,
            "opacity_fraction" => self.opacity_fraction = parse_num(key, value)?,
            "opacity_cap" => self.opacity_cap = parse_num(key, value)?,
            "eval_max_dim" => self.eval_max_dim = parse_num(key, value)?,
            "stats_max_dim" => self.stats_max_dim = parse_num(key, value)?,
            "holdout_every" => self.holdout_every = parse_num(key, value)?,
            "psnr_budget_db" => self.psnr_budget_db = parse_num(key, value)?,
            "fidelity_floor_db" => self.fidelity_floor_db = parse_num(key, value)?,
            "quality_gate" => self.quality_gate = parse_bool(key, value)?,
            "kmeans_k" => self.kmeans_k = parse_num(key, value)?,
            "kmeans_iterations" => self.kmeans_iterations = parse_num(key, value)?,
            "sigma_mode" => {
                self.sigma_mode = match value {
                    "std_dev" => SigmaMode::StdDev,
                    "variance" => SigmaMode::Variance,
                    _ => return Err(unknown(key, value)),
                }
            }
            "pixel_mode" => {
                self.pixel_mode = match value {
                    "contributed" => PixelCountMode::Contributed,
                    "overlap" => PixelCountMode::Overlap,
                    _ => return Err(unknown(key, value)),
                }
            }
            "radius_mode" => {
                self.radius_mode = match value {
                    "length" => RadiusMode::Length,
                    "area" => RadiusMode::Area,
                    _ => return Err(unknown(key, value)),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies pairs in order, except that `preset` always goes first so
    /// explicit keys override it.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let mut c = Self::default();
        for (k, v) in pairs.iter().filter(|(k, _)| *k == "preset") {
            c.set(k, v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| *k != "preset") {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.lambda.is_finite() && self.score_floor.is_finite()) {
            return bad("lambda and score_floor must be finite");
        }
        if !(self.eps_sigma >= 0.0 && self.eps_cdist >= 0.0) {
            return bad("thresholds must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.cull_fraction)
            || !(0.0..=1.0).contains(&self.opacity_fraction)
        {
            return bad("fractions must lie in [0, 1]");
        }
        if self.kmeans_k == 0 || self.kmeans_k > 256 {
            return bad("kmeans_k must lie in 1..=256");
        }
        Ok(())
    }

    pub fn prune_config(&self) -> PruneConfig {
        let mut p = PruneConfig {
            neighbours: self.neighbours,
            radius_mode: self.radius_mode,
            passes: self.prune_passes,
            ..PruneConfig::default()
        };
        p.redundancy.lambda = self.lambda;
        p.redundancy.score_floor = self.score_floor;
        p.redundancy.fraction = self.cull_fraction;
        p.opacity.fraction = self.opacity_fraction;
        p.opacity.cap = self.opacity_cap;
        p
    }

    pub fn sh_thresholds<T: crate::Real>(&self) -> ShThresholds<T> {
        ShThresholds::new(self.eps_sigma, self.eps_cdist)
    }

    pub fn kmeans_config(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.kmeans_k,
            max_iterations: self.kmeans_iterations,
        }
    }

    /// Every key with its current value, in the config-file syntax.
    pub fn to_pairs(&self) -> BTreeMap<&'static str, String> {
        let values = [
            self.preset.to_string(),
            self.lambda.to_string(),
            self.score_floor.to_string(),
            self.eps_sigma.to_string(),
            self.eps_cdist.to_string(),
            self.prune_passes.to_string(),
            self.neighbours.to_string(),
            self.cull_fraction.to_string(),
            self.opacity_fraction.to_string(),
            self.opacity_cap.to_string(),
            self.eval_max_dim.to_string(),
            self.stats_max_dim.to_string(),
            self.holdout_every.to_string(),
            self.psnr_budget_db.to_string(),
            self.fidelity_floor_db.to_string(),
            self.quality_gate.to_string(),
            self.kmeans_k.to_string(),
            self.kmeans_iterations.to_string(),
            sigma_mode_name(self.sigma_mode).to_string(),
            pixel_mode_name(self.pixel_mode).to_string(),
            radius_mode_name(self.radius_mode).to_string(),
            self.seed.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

impl Serialize for PipelineConfig {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(serializer)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`",
                n + 1
            )));
        };
        let k = k.trim();
        if !PipelineConfig::KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key `{k}`", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}
