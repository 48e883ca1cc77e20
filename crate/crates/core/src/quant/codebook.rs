//! The 20 scalar codebooks and nearest-entry index assignment.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math;
use crate::quant::half::round_half;
use crate::quant::kmeans::{closer_to_lower, kmeans_1d, KMeansConfig};
use crate::scalar::Real;
use crate::scene::{sh_groups, GaussianPrimitive};

pub const CODEBOOK_COUNT: usize = 20;
pub const CODEBOOK_SIZE: usize = 256;
/// Index bytes of a band-3 primitive: 1 + 3 + 1 + 3 + 3 + 45.
pub const MAX_SLOTS: usize = 56;
/// Index bytes shared by every band: opacity, scale, rotation and base color.
pub const BASE_SLOTS: usize = 11;

/// Index slots (bytes) of a primitive with `bands` SH bands: 11, 20, 35 or 56.
pub const fn slot_count(bands: usize) -> usize {
    BASE_SLOTS + 3 * sh_groups(bands)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttributeGroup {
    Opacity,
    Scale,
    RotationReal,
    RotationImag,
    BaseColor,
    /// Non-DC SH coefficient group `0..15`, shared across its 3 channels.
    Sh(u8),
}

impl AttributeGroup {
    pub fn all() -> impl Iterator<Item = AttributeGroup> {
        (0..CODEBOOK_COUNT).map(Self::from_index)
    }

    pub fn index(self) -> usize {
        match self {
            Self::Opacity => 0,
            Self::Scale => 1,
            Self::RotationReal => 2,
            Self::RotationImag => 3,
            Self::BaseColor => 4,
            Self::Sh(g) => 5 + g as usize,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => Self::Opacity,
            1 => Self::Scale,
            2 => Self::RotationReal,
            3 => Self::RotationImag,
            4 => Self::BaseColor,
            _ => Self::Sh((i - 5) as u8),
        }
    }

    /// Group owning record slot `slot` (see the compact record layout).
    pub fn of_slot(slot: usize) -> Self {
        match slot {
            0 => Self::Opacity,
            1..=3 => Self::Scale,
            4 => Self::RotationReal,
            5..=7 => Self::RotationImag,
            8..=10 => Self::BaseColor,
            s => Self::Sh(((s - BASE_SLOTS) / 3) as u8),
        }
    }

    pub fn name(self) -> String {
        match self {
            Self::Opacity => "opacity".into(),
            Self::Scale => "scale".into(),
            Self::RotationReal => "rotation_real".into(),
            Self::RotationImag => "rotation_imag".into(),
            Self::BaseColor => "base_color".into(),
            Self::Sh(g) => format!("sh_{g}"),
        }
    }
}

/// Rotation with real part made non-negative (`q` and `-q` are the same rotation).
pub fn canonical_rotation<T: Real>(q: [T; 4]) -> [T; 4] {
    let q = math::normalize_quat(q);
    if q[0] < T::zero() {
        q.map(|v| -v)
    } else {
        q
    }
}

/// Scalar slot values of a primitive in record order; `scale_divisor` applies
/// the whole-scene rescale.
pub fn slot_values<T: Real>(p: &GaussianPrimitive<T>, scale_divisor: T) -> Vec<T> {
    let q = canonical_rotation(p.rotation);
    let mut v = Vec::with_capacity(slot_count(p.band_count()));
    v.push(p.opacity);
    v.extend(p.scale.iter().map(|s| *s / scale_divisor));
    v.push(q[0]);
    v.extend_from_slice(&q[1..]);
    v.extend_from_slice(&p.base_color);
    for g in &p.sh_rest[..sh_groups(p.band_count())] {
        v.extend_from_slice(g);
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    /// Strictly ascending, 1..=256 entries.
    pub entries: Vec<T>,
    /// No training values existed for this group; holds the single entry 0.
    pub unused: bool,
    /// Training SSE against the full-precision centroids.
    pub sse: f64,
}

impl<T: Real> Codebook<T> {
    pub fn unused() -> Self {
        Self {
            entries: vec![T::zero()],
            unused: true,
            sse: 0.0,
        }
    }

    /// Index of the nearest entry; ties resolve to the lower entry.
    pub fn nearest(&self, v: T) -> u8 {
        let e = &self.entries;
        let at = e.partition_point(|c| *c < v);
        let idx = if at == 0 {
            0
        } else if at == e.len() {
            e.len() - 1
        } else if closer_to_lower(v.as_f64(), e[at - 1].as_f64(), e[at].as_f64()) {
            at - 1
        } else {
            at
        };
        idx as u8
    }

    #[inline]
    pub fn get(&self, idx: u8) -> T {
        self.entries[idx as usize]
    }

    /// Entries rounded to binary16; duplicates created by rounding are merged.
    pub fn to_half(&self) -> Self {
        let mut entries: Vec<T> = self.entries.iter().map(|v| round_half(*v)).collect();
        entries.dedup();
        Self {
            entries,
            unused: self.unused,
            sse: self.sse,
        }
    }

    pub fn min(&self) -> T {
        self.entries[0]
    }

    pub fn max(&self) -> T {
        *self.entries.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookSet<T> {
    pub books: Vec<Codebook<T>>,
}

impl<T: Real> CodebookSet<T> {
    pub fn get(&self, g: AttributeGroup) -> &Codebook<T> {
        &self.books[g.index()]
    }

    pub fn to_half(&self) -> Self {
        Self {
            books: self.books.iter().map(Codebook::to_half).collect(),
        }
    }
}

/// Pools every scalar slot of the scene by group.
pub fn pool_values<T: Real>(primitives: &[GaussianPrimitive<T>], scale_divisor: T) -> Vec<Vec<T>> {
    let mut pools: Vec<Vec<T>> = vec![Vec::new(); CODEBOOK_COUNT];
    for p in primitives {
        for (slot, v) in slot_values(p, scale_divisor).into_iter().enumerate() {
            pools[AttributeGroup::of_slot(slot).index()].push(v);
        }
    }
    pools
}

/// Trains one codebook per attribute group (full precision, not yet rounded to binary16).
pub fn build_codebooks<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    config: &KMeansConfig,
    scale_divisor: T,
) -> Result<CodebookSet<T>> {
    if primitives.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build codebooks for an empty scene".into(),
        ));
    }
    let pools = pool_values(primitives, scale_divisor);
    let books = pools
        .par_iter()
        .enumerate()
        .map(|(i, vals)| {
            let group = AttributeGroup::from_index(i);
            if vals.is_empty() {
                return Ok(Codebook::unused());
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(group.name()));
            }
            let km = kmeans_1d(vals, config)?;
            Ok(Codebook {
                entries: km.centroids,
                unused: false,
                sse: km.sse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CodebookSet { books })
}

/// Per-primitive codebook indices in record slot order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizedAttributes {
    pub bands: u8,
    pub indices: [u8; MAX_SLOTS],
}

impl QuantizedAttributes {
    pub fn slots(&self) -> &[u8] {
        &self.indices[..slot_count(self.bands as usize)]
    }
}

pub fn assign_indices<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    codebooks: &CodebookSet<T>,
    scale_divisor: T,
) -> Vec<QuantizedAttributes> {
    primitives
        .par_iter()
        .map(|p| {
            let mut indices = [0u8; MAX_SLOTS];
            for (slot, v) in slot_values(p, scale_divisor).into_iter().enumerate() {
                indices[slot] = codebooks.get(AttributeGroup::of_slot(slot)).nearest(v);
            }
            QuantizedAttributes {
                bands: p.band_count() as u8,
                indices,
            }
        })
        .collect()
}
