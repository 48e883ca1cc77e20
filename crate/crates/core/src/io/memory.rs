//! Byte accounting for uncompressed and compact scenes.

use serde::Serialize;

use crate::io::compact::{CompactScene, CODEBOOK_BYTES, HEADER_BYTES, POSITION_BYTES};
use crate::quant::codebook::CODEBOOK_COUNT;
use crate::scalar::Real;
use crate::scene::{float_count, sh_groups, GaussianPrimitive, MAX_BANDS};

pub const FLOAT_BYTES: usize = 4;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MemoryReport {
    pub primitives: usize,
    pub band_counts: [usize; 4],
    pub position_bytes: usize,
    pub scale_bytes: usize,
    pub rotation_bytes: usize,
    pub opacity_bytes: usize,
    pub color_bytes: usize,
    pub sh_rest_bytes: usize,
    pub codebook_bytes: usize,
    pub header_bytes: usize,
    pub total_bytes: usize,
    /// Primitive count of the reference 59-float scene.
    pub baseline_primitives: usize,
    pub baseline_bytes: usize,
    /// `baseline_bytes / total_bytes`.
    pub gain: f64,
}

impl MemoryReport {
    fn finish(mut self, baseline_primitives: usize) -> Self {
        self.total_bytes = self.position_bytes
            + self.scale_bytes
            + self.rotation_bytes
            + self.opacity_bytes
            + self.color_bytes
            + self.sh_rest_bytes
            + self.codebook_bytes
            + self.header_bytes;
        self.baseline_primitives = baseline_primitives;
        self.baseline_bytes = baseline_primitives * float_count(MAX_BANDS) * FLOAT_BYTES;
        self.gain = if self.total_bytes == 0 {
            f64::INFINITY
        } else {
            self.baseline_bytes as f64 / self.total_bytes as f64
        };
        self
    }

    /// SH-rest float count `Σ count_b · 3·groups(b)`.
    pub fn sh_rest_floats(&self) -> usize {
        (0..4).map(|b| self.band_counts[b] * 3 * sh_groups(b)).sum()
    }

    pub fn rows(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("position", self.position_bytes),
            ("scale", self.scale_bytes),
            ("rotation", self.rotation_bytes),
            ("opacity", self.opacity_bytes),
            ("color", self.color_bytes),
            ("sh_rest", self.sh_rest_bytes),
            ("codebooks", self.codebook_bytes),
            ("header", self.header_bytes),
            ("total", self.total_bytes),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,bytes\n");
        for (k, v) in self.rows() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s.push_str(&format!("baseline,{}\n", self.baseline_bytes));
        s.push_str(&format!("gain,{:.4}\n", self.gain));
        s
    }
}

/// Report for uncompressed 32-bit float storage from a band histogram.
pub fn memory_report_bands(band_counts: [usize; 4], baseline_primitives: usize) -> MemoryReport {
    let n: usize = band_counts.iter().sum();
    MemoryReport {
        primitives: n,
        band_counts,
        position_bytes: 3 * n * FLOAT_BYTES,
        scale_bytes: 3 * n * FLOAT_BYTES,
        rotation_bytes: 4 * n * FLOAT_BYTES,
        opacity_bytes: n * FLOAT_BYTES,
        color_bytes: 3 * n * FLOAT_BYTES,
        sh_rest_bytes: (0..4)
            .map(|b| band_counts[b] * 3 * sh_groups(b))
            .sum::<usize>()
            * FLOAT_BYTES,
        ..Default::default()
    }
    .finish(baseline_primitives)
}

pub fn memory_report_scene<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    baseline_primitives: usize,
) -> MemoryReport {
    let mut h = [0usize; 4];
    for p in primitives {
        h[p.band_count()] += 1;
    }
    memory_report_bands(h, baseline_primitives)
}

pub fn memory_report_compact(scene: &CompactScene, baseline_primitives: usize) -> MemoryReport {
    let band_counts = scene.counts();
    let n = scene.primitive_count();
    MemoryReport {
        primitives: n,
        band_counts,
        position_bytes: POSITION_BYTES * n,
        scale_bytes: 3 * n,
        rotation_bytes: 4 * n,
        opacity_bytes: n,
        color_bytes: 3 * n,
        sh_rest_bytes: (0..4).map(|b| band_counts[b] * 3 * sh_groups(b)).sum(),
        codebook_bytes: CODEBOOK_COUNT * CODEBOOK_BYTES,
        header_bytes: HEADER_BYTES,
        ..Default::default()
    }
    .finish(baseline_primitives)
}
