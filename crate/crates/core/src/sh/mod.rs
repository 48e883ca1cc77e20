//! Spherical harmonics evaluation and adaptive band culling.

pub mod cull;
pub mod eval;

pub use cull::{
    apply_bands, assign_bands, band_distances, color_statistics, cull_sh, sh_statistics,
    weighted_color_stats, BandAssignment, BandChoice, BandRule, ColorStats, ShCullConfig,
    ShCullResult, ShCullSummary, ShStatistics, ShThresholds, SigmaMode,
};
pub use eval::{eval_sh_color, eval_sh_truncations, rgb_to_dc, sh_basis, SH_C0};
