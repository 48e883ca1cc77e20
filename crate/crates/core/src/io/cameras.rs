//! Camera rigs: COLMAP text models (`cameras.txt` + `images.txt`) and JSON rigs.
//!
//! Two JSON layouts are accepted:
//! - `{"views": [{"width", "height", "fx", "fy", "cx", "cy", "rotation", "translation"}]}`
//!   with `rotation` a row-major world-to-camera matrix and `translation` its `t`.
//! - the `cameras.json` array written by the 3DGS trainer
//!   (`position` = camera center, `rotation` = camera-to-world, principal point at the center).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Mat3};
use crate::scalar::Real;
use crate::scene::CameraView;

/// Maximum tolerated deviation of a COLMAP quaternion norm from 1.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigView {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rig {
    pub views: Vec<RigView>,
}

#[derive(Deserialize)]
struct TrainerCamera {
    width: u32,
    height: u32,
    position: [f64; 3],
    rotation: [[f64; 3]; 3],
    fx: f64,
    fy: f64,
}

fn checked<T: Real>(view: CameraView<f64>) -> Result<CameraView<T>> {
    view.validate().map_err(Error::Camera)?;
    Ok(view.cast())
}

impl RigView {
    fn into_view(self) -> CameraView<f64> {
        CameraView {
            rotation: self.rotation,
            translation: self.translation,
            focal_x: self.fx,
            focal_y: self.fy,
            principal_x: self.cx,
            principal_y: self.cy,
            width: self.width,
            height: self.height,
        }
    }

    pub fn from_view<T: Real>(v: &CameraView<T>) -> Self {
        let v: CameraView<f64> = v.cast();
        Self {
            width: v.width,
            height: v.height,
            fx: v.focal_x,
            fy: v.focal_y,
            cx: v.principal_x,
            cy: v.principal_y,
            rotation: v.rotation,
            translation: v.translation,
            name: None,
        }
    }
}

pub fn parse_rig_json<T: Real>(text: &str) -> Result<Vec<CameraView<T>>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Camera(e.to_string()))?;
    let views: Vec<CameraView<f64>> = if value.is_array() {
        let cams: Vec<TrainerCamera> =
            serde_json::from_value(value).map_err(|e| Error::Camera(e.to_string()))?;
        cams.into_iter()
            .map(|c| {
                let rotation: Mat3<f64> = math::transpose(&c.rotation);
                let translation = math::scale(math::mat_vec(&rotation, c.position), -1.0);
                CameraView {
                    rotation,
                    translation,
                    focal_x: c.fx,
                    focal_y: c.fy,
                    principal_x: c.width as f64 / 2.0,
                    principal_y: c.height as f64 / 2.0,
                    width: c.width,
                    height: c.height,
                }
            })
            .collect()
    } else {
        let rig: Rig = serde_json::from_value(value).map_err(|e| Error::Camera(e.to_string()))?;
        rig.views.into_iter().map(RigView::into_view).collect()
    };
    views.into_iter().map(checked).collect()
}

pub fn rig_to_json<T: Real>(views: &[CameraView<T>]) -> String {
    let rig = Rig {
        views: views.iter().map(RigView::from_view).collect(),
    };
    serde_json::to_string_pretty(&rig).expect("rig serializes")
}

struct ColmapCamera {
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i + 1, l.trim()))
}

fn num<F: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<F> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Camera(format!("line {line}: bad or missing {what}")))
}

fn parse_colmap_cameras(text: &str) -> Result<HashMap<u32, ColmapCamera>> {
    let mut out = HashMap::new();
    for (line, l) in content_lines(text).filter(|(_, l)| !l.is_empty()) {
        let mut tok = l.split_whitespace();
        let id: u32 = num(tok.next(), "camera id", line)?;
        let model = tok.next().unwrap_or("");
        let width = num(tok.next(), "width", line)?;
        let height = num(tok.next(), "height", line)?;
        let params: Vec<f64> = tok
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Camera(format!("line {line}: bad camera parameter")))?;
        let cam = match (model, params.as_slice()) {
            ("SIMPLE_PINHOLE", [f, cx, cy]) => ColmapCamera {
                width,
                height,
                fx: *f,
                fy: *f,
                cx: *cx,
                cy: *cy,
            },
            ("PINHOLE", [fx, fy, cx, cy]) => ColmapCamera {
                width,
                height,
                fx: *fx,
                fy: *fy,
                cx: *cx,
                cy: *cy,
            },
            ("SIMPLE_PINHOLE" | "PINHOLE", _) => {
                return Err(Error::Camera(format!(
                    "line {line}: wrong parameter count for {model}"
                )))
            }
            _ => {
                return Err(Error::Camera(format!(
                    "line {line}: unsupported camera model `{model}`"
                )))
            }
        };
        out.insert(id, cam);
    }
    Ok(out)
}

/// Parses a COLMAP text model; views are returned sorted by image name.
pub fn parse_colmap<T: Real>(cameras_txt: &str, images_txt: &str) -> Result<Vec<CameraView<T>>> {
    let cameras = parse_colmap_cameras(cameras_txt)?;
    let lines: Vec<(usize, &str)> = content_lines(images_txt).collect();
    let mut views: Vec<(String, CameraView<f64>)> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (line, l) = lines[i];
        if l.is_empty() {
            // trailing blank lines
            i += 1;
            continue;
        }
        let mut tok = l.split_whitespace();
        let _image_id: u32 = num(tok.next(), "image id", line)?;
        let mut q = [0f64; 4];
        for (k, v) in q.iter_mut().enumerate() {
            *v = num(tok.next(), ["qw", "qx", "qy", "qz"][k], line)?;
        }
        let mut t = [0f64; 3];
        for (k, v) in t.iter_mut().enumerate() {
            *v = num(tok.next(), ["tx", "ty", "tz"][k], line)?;
        }
        let cam_id: u32 = num(tok.next(), "camera id", line)?;
        let name = tok.next().unwrap_or("").to_string();
        let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (qn - 1.0).abs() > QUAT_NORM_TOLERANCE {
            return Err(Error::Camera(format!(
                "line {line}: quaternion norm {qn:.6} is not 1"
            )));
        }
        let cam = cameras
            .get(&cam_id)
            .ok_or_else(|| Error::Camera(format!("line {line}: unknown camera id {cam_id}")))?;
        views.push((
            name,
            CameraView {
                rotation: math::quat_to_mat(math::normalize_quat(q)),
                translation: t,
                focal_x: cam.fx,
                focal_y: cam.fy,
                principal_x: cam.cx,
                principal_y: cam.cy,
                width: cam.width,
                height: cam.height,
            },
        ));
        // skip the POINTS2D line that follows every image line
        i += 2;
    }
    views.sort_by(|a, b| a.0.cmp(&b.0));
    views.into_iter().map(|(_, v)| checked(v)).collect()
}

fn colmap_dir(dir: &Path) -> Option<PathBuf> {
    [dir.to_path_buf(), dir.join("sparse/0"), dir.join("sparse")]
        .into_iter()
        .find(|d| d.join("cameras.txt").is_file() && d.join("images.txt").is_file())
}

/// Reads a camera rig from a COLMAP text directory or a JSON file.
pub fn read_cameras<T: Real>(path: impl AsRef<Path>) -> Result<Vec<CameraView<T>>> {
    let path = path.as_ref();
    if path.is_dir() {
        let dir = colmap_dir(path).ok_or_else(|| {
            Error::Camera(format!(
                "{}: no cameras.txt/images.txt found",
                path.display()
            ))
        })?;
        let cams = fs::read_to_string(dir.join("cameras.txt"))?;
        let imgs = fs::read_to_string(dir.join("images.txt"))?;
        return parse_colmap(&cams, &imgs);
    }
    let text = fs::read_to_string(path)?;
    parse_rig_json(&text)
}
