//! The `.rgs` compact scene container.
//!
//! All integers little-endian. Layout:
//!
//! ```text
//! header (28 bytes)
//!   magic          [u8; 4]  "RGS1"
//!   version        u16      1
//!   reserved       u16      0
//!   position_scale f32      power of two; decoded position and scale are multiplied by it
//!   counts         [u32; 4] primitives with 0, 1, 2, 3 SH bands
//! codebooks (20 × 514 bytes), in group order
//!   opacity, scale, rotation_real, rotation_imag, base_color, sh_0 .. sh_14
//!   len            u16      used entries, 1..=256
//!   entries        [f16; 256] ascending; slots past `len` repeat the last entry
//! records, set 0 then 1, 2, 3
//!   position       [f16; 3]
//!   indices        [u8; 11 + 3·groups]   opacity, scale×3, rot_real, rot_imag×3,
//!                                         base_color×3, then RGB per SH group
//! ```

use crate::error::{Error, Result};
use crate::quant::codebook::{
    slot_count, AttributeGroup, CODEBOOK_COUNT, CODEBOOK_SIZE, MAX_SLOTS,
};
use crate::quant::half::{f16, from_half};
use crate::scalar::Real;
use crate::scene::GaussianPrimitive;

pub const MAGIC: [u8; 4] = *b"RGS1";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 28;
pub const CODEBOOK_BYTES: usize = 2 + 2 * CODEBOOK_SIZE;
pub const POSITION_BYTES: usize = 6;

/// Bytes of one record in band set `bands`: 17, 26, 41 or 62.
pub const fn record_bytes(bands: usize) -> usize {
    POSITION_BYTES + slot_count(bands)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompactRecord {
    pub position: [f16; 3],
    /// Only the first `slot_count(bands)` entries are meaningful.
    pub indices: [u8; MAX_SLOTS],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompactScene {
    pub position_scale: f32,
    /// 20 codebooks, each 1..=256 binary16 entries.
    pub codebooks: Vec<Vec<f16>>,
    /// Records partitioned by band count 0..=3.
    pub band_sets: [Vec<CompactRecord>; 4],
}

impl CompactScene {
    pub fn primitive_count(&self) -> usize {
        self.band_sets.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|b| self.band_sets[b].len())
    }

    /// Size of [`encode_compact`]'s output without building it.
    pub fn encoded_len(&self) -> usize {
        HEADER_BYTES
            + CODEBOOK_COUNT * CODEBOOK_BYTES
            + (0..4)
                .map(|b| self.band_sets[b].len() * record_bytes(b))
                .sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        if self.codebooks.len() != CODEBOOK_COUNT {
            return Err(Error::Encode(format!(
                "expected {CODEBOOK_COUNT} codebooks, got {}",
                self.codebooks.len()
            )));
        }
        for (g, cb) in self.codebooks.iter().enumerate() {
            if cb.is_empty() || cb.len() > CODEBOOK_SIZE {
                return Err(Error::Encode(format!(
                    "codebook {} has {} entries",
                    AttributeGroup::from_index(g).name(),
                    cb.len()
                )));
            }
        }
        let s = self.position_scale;
        if !(s.is_finite() && s > 0.0 && s.log2().fract() == 0.0) {
            return Err(Error::Encode(format!(
                "position scale {s} is not a power of two"
            )));
        }
        for (bands, set) in self.band_sets.iter().enumerate() {
            if set.len() > u32::MAX as usize {
                return Err(Error::Encode("band set too large".into()));
            }
            for (i, r) in set.iter().enumerate() {
                for (slot, &idx) in r.indices[..slot_count(bands)].iter().enumerate() {
                    let g = AttributeGroup::of_slot(slot);
                    if idx as usize >= self.codebooks[g.index()].len() {
                        return Err(Error::Encode(format!(
                            "set {bands} record {i}: index {idx} out of range for codebook {}",
                            g.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reconstructs activated primitives in set order (band 0 first).
    pub fn to_primitives<T: Real>(&self) -> Vec<GaussianPrimitive<T>> {
        let scale = T::lit(self.position_scale as f64);
        let look = |slot: usize, idx: u8| -> T {
            from_half(self.codebooks[AttributeGroup::of_slot(slot).index()][idx as usize])
        };
        let mut out = Vec::with_capacity(self.primitive_count());
        for (bands, set) in self.band_sets.iter().enumerate() {
            for r in set {
                let ix = &r.indices;
                let v = |slot: usize| look(slot, ix[slot]);
                let groups = (slot_count(bands) - 11) / 3;
                out.push(GaussianPrimitive {
                    position: r.position.map(|h| from_half::<T>(h) * scale),
                    scale: [v(1) * scale, v(2) * scale, v(3) * scale],
                    rotation: [v(4), v(5), v(6), v(7)],
                    opacity: v(0),
                    base_color: [v(8), v(9), v(10)],
                    sh_rest: (0..groups)
                        .map(|g| [0, 1, 2].map(|c| v(11 + 3 * g + c)))
                        .collect(),
                });
            }
        }
        out
    }
}

/// Serializes a compact scene; fails on out-of-range indices or malformed codebooks.
pub fn encode_compact(scene: &CompactScene) -> Result<Vec<u8>> {
    scene.validate()?;
    let mut out = Vec::with_capacity(scene.encoded_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&scene.position_scale.to_le_bytes());
    for set in &scene.band_sets {
        out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    }
    for cb in &scene.codebooks {
        out.extend_from_slice(&(cb.len() as u16).to_le_bytes());
        let last = *cb.last().unwrap();
        for i in 0..CODEBOOK_SIZE {
            out.extend_from_slice(&cb.get(i).copied().unwrap_or(last).to_le_bytes());
        }
    }
    for (bands, set) in scene.band_sets.iter().enumerate() {
        for r in set {
            for h in r.position {
                out.extend_from_slice(&h.to_le_bytes());
            }
            out.extend_from_slice(&r.indices[..slot_count(bands)]);
        }
    }
    debug_assert_eq!(out.len(), scene.encoded_len());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::parse(self.pos, format!("truncated {what}"))),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parses a `.rgs` byte stream. Every failure carries the byte offset.
pub fn parse_compact(bytes: &[u8]) -> Result<CompactScene> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::parse(0, "bad magic"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    r.u16("reserved")?;
    let at = r.pos;
    let position_scale = f32::from_bits(r.u32("position scale")?);
    if !(position_scale.is_finite() && position_scale > 0.0 && position_scale.log2().fract() == 0.0)
    {
        return Err(Error::parse(
            at,
            format!("invalid position scale {position_scale}"),
        ));
    }
    let mut counts = [0usize; 4];
    for c in counts.iter_mut() {
        *c = r.u32("set count")? as usize;
    }
    let mut codebooks = Vec::with_capacity(CODEBOOK_COUNT);
    for g in 0..CODEBOOK_COUNT {
        let at = r.pos;
        let len = r.u16("codebook length")? as usize;
        if len == 0 || len > CODEBOOK_SIZE {
            return Err(Error::parse(at, format!("codebook {g} length {len}")));
        }
        let raw = r.take(2 * CODEBOOK_SIZE, "codebook entries")?;
        let entries: Vec<f16> = raw[..2 * len]
            .chunks_exact(2)
            .map(|c| f16::from_le_bytes([c[0], c[1]]))
            .collect();
        if let Some(i) = entries.iter().position(|h| !h.is_finite()) {
            return Err(Error::parse(
                at + 2 + 2 * i,
                format!("non-finite entry in codebook {g}"),
            ));
        }
        codebooks.push(entries);
    }
    let expected: usize = (0..4)
        .try_fold(r.pos, |acc, b| {
            counts[b]
                .checked_mul(record_bytes(b))
                .and_then(|n| acc.checked_add(n))
        })
        .ok_or_else(|| Error::parse(HEADER_BYTES - 16, "set counts overflow"))?;
    if expected > bytes.len() {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated records: need {expected} bytes"),
        ));
    }
    if expected < bytes.len() {
        return Err(Error::parse(
            expected,
            "trailing bytes after last record (count mismatch)",
        ));
    }
    let mut band_sets: [Vec<CompactRecord>; 4] = Default::default();
    for (bands, set) in band_sets.iter_mut().enumerate() {
        let slots = slot_count(bands);
        set.reserve(counts[bands]);
        for _ in 0..counts[bands] {
            let at = r.pos;
            let b = r.take(record_bytes(bands), "record")?;
            let position = [0, 1, 2].map(|i| f16::from_le_bytes([b[2 * i], b[2 * i + 1]]));
            let mut indices = [0u8; MAX_SLOTS];
            indices[..slots].copy_from_slice(&b[POSITION_BYTES..]);
            for (slot, &idx) in indices[..slots].iter().enumerate() {
                if idx as usize >= codebooks[AttributeGroup::of_slot(slot).index()].len() {
                    return Err(Error::parse(
                        at + POSITION_BYTES + slot,
                        format!(
                            "index {idx} beyond codebook {}",
                            AttributeGroup::of_slot(slot).name()
                        ),
                    ));
                }
            }
            set.push(CompactRecord { position, indices });
        }
    }
    Ok(CompactScene {
        position_scale,
        codebooks,
        band_sets,
    })
}

/// Parses and reconstructs primitives.
pub fn decode_compact<T: Real>(bytes: &[u8]) -> Result<Vec<GaussianPrimitive<T>>> {
    Ok(parse_compact(bytes)?.to_primitives())
}
