//! Binary little-endian PLY in the layout written by the reference 3DGS trainer.
//!
//! Stored values are pre-activation: logit opacity, log scale, unnormalized
//! quaternion `(w, x, y, z)` in `rot_0..rot_3`. `f_rest_*` is channel-major
//! (`f_rest[c * groups + g]`).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math;
use crate::scalar::Real;
use crate::scene::{sh_groups, GaussianPrimitive, MAX_BANDS};

/// Opacity clamp applied before `logit` when an activated opacity is exactly 0 or 1.
pub const OPACITY_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalarKind {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_uint(self, b: &[u8]) -> Option<usize> {
        Some(match self {
            Self::U8 => b[0] as usize,
            Self::I8 => usize::try_from(b[0] as i8).ok()?,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as usize,
            Self::I16 => usize::try_from(i16::from_le_bytes([b[0], b[1]])).ok()?,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize,
            Self::I32 => usize::try_from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])).ok()?,
            Self::F32 | Self::F64 => return None,
        })
    }
}

#[derive(Debug)]
enum PropertyKind {
    Scalar(ScalarKind),
    List { count: ScalarKind, item: ScalarKind },
}

#[derive(Debug)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

impl Element {
    fn fixed_stride(&self) -> Option<usize> {
        self.properties
            .iter()
            .map(|p| match p.kind {
                PropertyKind::Scalar(k) => Some(k.size()),
                PropertyKind::List { .. } => None,
            })
            .sum()
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Vec<Element>, usize)> {
    const END: &[u8] = b"end_header";
    let mut elements: Vec<Element> = Vec::new();
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut saw_format = false;
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::ply("header", "missing end_header"))?;
        let raw = &rest[..nl];
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::ply("header", "header is not valid UTF-8"))?
            .trim_end_matches('\r')
            .trim();
        pos += nl + 1;
        line_no += 1;
        if line_no == 1 {
            if line != "ply" {
                return Err(Error::ply("header", "missing `ply` magic"));
            }
            continue;
        }
        if line.as_bytes() == END {
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let fmt = tok.next().unwrap_or("");
                if fmt != "binary_little_endian" {
                    return Err(Error::ply("format", format!("unsupported format `{fmt}`")));
                }
                saw_format = true;
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::ply("element", "missing name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::ply(name, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::ply("property", "property before any element"))?;
                let ty = tok.next().unwrap_or("");
                let kind = if ty == "list" {
                    let count = tok.next().and_then(ScalarKind::parse);
                    let item = tok.next().and_then(ScalarKind::parse);
                    match (count, item) {
                        (Some(count), Some(item))
                            if !matches!(count, ScalarKind::F32 | ScalarKind::F64) =>
                        {
                            PropertyKind::List { count, item }
                        }
                        _ => return Err(Error::ply(el.name.clone(), "bad list property")),
                    }
                } else {
                    PropertyKind::Scalar(
                        ScalarKind::parse(ty)
                            .ok_or_else(|| Error::ply(ty, "unknown property type"))?,
                    )
                };
                let name = tok
                    .next()
                    .ok_or_else(|| Error::ply("property", "missing name"))?;
                el.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::ply(
                    "header",
                    format!("unexpected keyword `{other}`"),
                ))
            }
        }
    }
    if !saw_format {
        return Err(Error::ply("format", "missing format line"));
    }
    Ok((elements, pos))
}

/// Byte length of one element instance at `data`, walking list counts.
fn element_span(el: &Element, data: &[u8], count: usize) -> Result<usize> {
    if let Some(stride) = el.fixed_stride() {
        return stride
            .checked_mul(count)
            .filter(|&n| n <= data.len())
            .ok_or_else(|| Error::ply(el.name.clone(), "element count exceeds file size"));
    }
    let mut pos = 0usize;
    for _ in 0..count {
        for p in &el.properties {
            match p.kind {
                PropertyKind::Scalar(k) => pos += k.size(),
                PropertyKind::List { count, item } => {
                    let b = data
                        .get(pos..pos + count.size())
                        .ok_or_else(|| Error::ply(p.name.clone(), "truncated list"))?;
                    let n = count
                        .read_uint(b)
                        .ok_or_else(|| Error::ply(p.name.clone(), "negative list length"))?;
                    pos += count.size() + n * item.size();
                }
            }
            if pos > data.len() {
                return Err(Error::ply(
                    el.name.clone(),
                    "element count exceeds file size",
                ));
            }
        }
    }
    Ok(pos)
}

struct VertexLayout {
    stride: usize,
    position: [usize; 3],
    dc: [usize; 3],
    rest: Vec<usize>,
    opacity: usize,
    scale: [usize; 3],
    rot: [usize; 4],
}

fn vertex_layout(el: &Element) -> Result<VertexLayout> {
    let mut offsets = std::collections::HashMap::new();
    let mut off = 0usize;
    for p in &el.properties {
        match p.kind {
            PropertyKind::Scalar(k) => {
                offsets.insert(p.name.as_str(), (off, k));
                off += k.size();
            }
            PropertyKind::List { .. } => {
                return Err(Error::ply(
                    p.name.clone(),
                    "list property in vertex element",
                ))
            }
        }
    }
    let field = |name: &str| -> Result<usize> {
        match offsets.get(name) {
            Some((o, ScalarKind::F32)) => Ok(*o),
            Some((_, k)) => Err(Error::ply(name, format!("expected float, found {k:?}"))),
            None => Err(Error::ply(name, "missing field")),
        }
    };
    let rest_count = (0..)
        .take_while(|i| offsets.contains_key(format!("f_rest_{i}").as_str()))
        .count();
    let groups = (0..=MAX_BANDS)
        .map(sh_groups)
        .find(|&g| 3 * g >= rest_count)
        .unwrap_or(15);
    if 3 * groups != rest_count || rest_count > 45 {
        let missing = if rest_count >= 45 { 45 } else { rest_count };
        return Err(Error::ply(format!("f_rest_{missing}"), "missing field"));
    }
    let rest = (0..rest_count)
        .map(|i| field(&format!("f_rest_{i}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(VertexLayout {
        stride: off,
        position: [field("x")?, field("y")?, field("z")?],
        dc: [field("f_dc_0")?, field("f_dc_1")?, field("f_dc_2")?],
        rest,
        opacity: field("opacity")?,
        scale: [field("scale_0")?, field("scale_1")?, field("scale_2")?],
        rot: [
            field("rot_0")?,
            field("rot_1")?,
            field("rot_2")?,
            field("rot_3")?,
        ],
    })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Parses a 3DGS PLY from memory and applies activations.
///
/// Trailing SH bands that are entirely zero are dropped, so a scene written
/// with mixed band counts reads back with the same counts.
pub fn parse_ply<T: Real>(bytes: &[u8]) -> Result<Vec<GaussianPrimitive<T>>> {
    let (elements, mut pos) = parse_header(bytes)?;
    let vertex_idx = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::ply("vertex", "missing vertex element"))?;
    for el in &elements[..vertex_idx] {
        pos += element_span(el, &bytes[pos..], el.count)?;
    }
    let el = &elements[vertex_idx];
    let layout = vertex_layout(el)?;
    let body = &bytes[pos..];
    let needed = layout
        .stride
        .checked_mul(el.count)
        .ok_or_else(|| Error::ply("vertex", "element count overflows"))?;
    if body.len() < needed {
        return Err(Error::ply(
            "vertex",
            format!(
                "{} vertices need {needed} bytes, file has {}",
                el.count,
                body.len()
            ),
        ));
    }
    let groups = layout.rest.len() / 3;
    let mut out = Vec::with_capacity(el.count);
    for rec in body[..needed]
        .chunks_exact(layout.stride.max(1))
        .take(el.count)
    {
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]) as f64;
        let q = math::normalize_quat(layout.rot.map(f));
        let sh_rest = (0..groups)
            .map(|g| [0, 1, 2].map(|c| T::lit(f(layout.rest[c * groups + g]))))
            .collect();
        let mut p = GaussianPrimitive {
            position: layout.position.map(|o| T::lit(f(o))),
            scale: layout.scale.map(|o| T::lit(f(o).exp())),
            rotation: q.map(T::lit),
            opacity: T::lit(sigmoid(f(layout.opacity))),
            base_color: layout.dc.map(|o| T::lit(f(o))),
            sh_rest,
        };
        p.trim_zero_bands();
        out.push(p);
    }
    Ok(out)
}

pub fn read_3dgs_ply<T: Real>(path: impl AsRef<Path>) -> Result<Vec<GaussianPrimitive<T>>> {
    let bytes = fs::read(path)?;
    parse_ply(&bytes)
}

/// Outcome of a PLY write.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WriteReport {
    pub primitives: usize,
    /// Primitives whose opacity was exactly 0 or 1 and got clamped before `logit`.
    pub clamped_opacity: usize,
}

pub fn ply_header(count: usize) -> String {
    let mut h = String::from("ply\nformat binary_little_endian 1.0\n");
    h.push_str(&format!("element vertex {count}\n"));
    let mut names: Vec<String> = [
        "x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend((0..45).map(|i| format!("f_rest_{i}")));
    names.extend(
        [
            "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    for n in names {
        h.push_str(&format!("property float {n}\n"));
    }
    h.push_str("end_header\n");
    h
}

/// Serializes primitives, zero-padding every primitive to 3 bands.
pub fn encode_ply<T: Real>(primitives: &[GaussianPrimitive<T>]) -> Result<(Vec<u8>, WriteReport)> {
    let header = ply_header(primitives.len());
    let mut buf = Vec::with_capacity(header.len() + primitives.len() * 62 * 4);
    buf.extend_from_slice(header.as_bytes());
    let mut report = WriteReport {
        primitives: primitives.len(),
        clamped_opacity: 0,
    };
    let push = |buf: &mut Vec<u8>, v: f64| buf.extend_from_slice(&(v as f32).to_le_bytes());
    for (i, p) in primitives.iter().enumerate() {
        for v in p.position {
            push(&mut buf, v.as_f64());
        }
        for _ in 0..3 {
            push(&mut buf, 0.0);
        }
        for v in p.base_color {
            push(&mut buf, v.as_f64());
        }
        for c in 0..3 {
            for g in 0..15 {
                push(
                    &mut buf,
                    p.sh_rest.get(g).map_or(0.0, |grp| grp[c].as_f64()),
                );
            }
        }
        let mut a = p.opacity.as_f64();
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidInput(format!(
                "primitive {i}: opacity {a} outside [0,1]"
            )));
        }
        if a == 0.0 || a == 1.0 {
            a = a.clamp(OPACITY_EPS, 1.0 - OPACITY_EPS);
            report.clamped_opacity += 1;
        }
        push(&mut buf, (a / (1.0 - a)).ln());
        for s in p.scale {
            let s = s.as_f64();
            if !(s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "primitive {i}: non-positive scale {s}"
                )));
            }
            push(&mut buf, s.ln());
        }
        for v in p.rotation {
            push(&mut buf, v.as_f64());
        }
    }
    Ok((buf, report))
}

pub fn write_3dgs_ply<T: Real>(
    path: impl AsRef<Path>,
    primitives: &[GaussianPrimitive<T>],
) -> Result<WriteReport> {
    let (buf, report) = encode_ply(primitives)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(report)
}
