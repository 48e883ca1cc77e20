//! Codebook quantization of primitive attributes and binary16 packing.

pub mod codebook;
pub mod half;
pub mod kmeans;

use crate::error::{Error, Result};
use crate::io::compact::{CompactRecord, CompactScene};
use crate::scalar::Real;
use crate::scene::GaussianPrimitive;

pub use codebook::{
    assign_indices, build_codebooks, AttributeGroup, Codebook, CodebookSet, QuantizedAttributes,
    CODEBOOK_COUNT, CODEBOOK_SIZE,
};
pub use half::{from_half, to_half};
pub use kmeans::{kmeans_1d, KMeans, KMeansConfig};

#[derive(Clone, Debug)]
pub struct Quantized<T> {
    pub compact: CompactScene,
    /// Full-precision codebooks before binary16 rounding.
    pub codebooks: CodebookSet<T>,
    /// Power-of-two divisor applied because positions exceeded the binary16 range.
    pub rescale: Option<f64>,
}

/// Builds codebooks, assigns indices and packs positions as binary16.
///
/// Band counts are taken from each primitive's `sh_rest`.
pub fn quantize_scene<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    config: &KMeansConfig,
) -> Result<Quantized<T>> {
    if primitives.is_empty() {
        return Err(Error::InvalidInput("cannot quantize an empty scene".into()));
    }
    let max_abs = primitives
        .iter()
        .flat_map(|p| p.position)
        .map(|v| v.as_f64().abs())
        .fold(0.0, f64::max);
    if !max_abs.is_finite() {
        return Err(Error::NonFinite("position".into()));
    }
    let factor = half::half_range_scale(max_abs);
    let divisor = T::lit(factor);
    let codebooks = build_codebooks(primitives, config, divisor)?;
    let stored = codebooks.to_half();
    let indices = assign_indices(primitives, &stored, divisor);
    let mut band_sets: [Vec<CompactRecord>; 4] = Default::default();
    for (p, q) in primitives.iter().zip(&indices) {
        band_sets[q.bands as usize].push(CompactRecord {
            position: p.position.map(|v| to_half(v / divisor)),
            indices: q.indices,
        });
    }
    let compact = CompactScene {
        position_scale: factor as f32,
        codebooks: stored
            .books
            .iter()
            .map(|b| b.entries.iter().map(|v| to_half(*v)).collect())
            .collect(),
        band_sets,
    };
    Ok(Quantized {
        compact,
        codebooks,
        rescale: (factor != 1.0).then_some(factor),
    })
}
