//! Core scene types: Gaussian primitives, pinhole views and the scene container.

use serde::{Deserialize, Serialize};

use crate::math::{self, Mat3, Vec3};
use crate::scalar::Real;

/// Highest SH degree supported by the 3DGS layout.
pub const MAX_BANDS: usize = 3;
/// Number of non-DC coefficient groups for each band count 0..=3.
pub const SH_GROUPS: [usize; 4] = [0, 3, 8, 15];

/// Number of non-DC SH coefficient groups (each one RGB triple) for `bands` bands.
#[inline]
pub const fn sh_groups(bands: usize) -> usize {
    bands * bands + 2 * bands
}

/// Floats needed to store one primitive with `bands` SH bands:
/// 14 for position/scale/rotation/opacity/color plus 3 per SH group.
#[inline]
pub const fn float_count(bands: usize) -> usize {
    14 + 3 * sh_groups(bands)
}

/// One Gaussian splat in activated form.
///
/// `rotation` is `(w, x, y, z)`. `sh_rest[g]` holds the RGB coefficients of
/// group `g` (degree-major, `m = -l..=l` inside a degree), so its length is
/// 0, 3, 8 or 15 and fixes the band count.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrimitive<T> {
    pub position: Vec3<T>,
    pub scale: Vec3<T>,
    pub rotation: [T; 4],
    pub opacity: T,
    /// DC (band 0) SH coefficients.
    pub base_color: Vec3<T>,
    pub sh_rest: Vec<[T; 3]>,
}

impl<T: Real> GaussianPrimitive<T> {
    /// A diffuse primitive with no higher bands.
    pub fn new(
        position: Vec3<T>,
        scale: Vec3<T>,
        rotation: [T; 4],
        opacity: T,
        base_color: Vec3<T>,
    ) -> Self {
        Self {
            position,
            scale,
            rotation,
            opacity,
            base_color,
            sh_rest: Vec::new(),
        }
    }

    /// Band count N implied by `sh_rest`; non-canonical lengths round down.
    pub fn band_count(&self) -> usize {
        match self.sh_rest.len() {
            0..=2 => 0,
            3..=7 => 1,
            8..=14 => 2,
            _ => 3,
        }
    }

    pub fn float_count(&self) -> usize {
        float_count(self.band_count())
    }

    /// Drops coefficient groups above `bands`. Never adds groups.
    pub fn truncate_bands(&mut self, bands: usize) {
        let keep = sh_groups(bands.min(MAX_BANDS));
        self.sh_rest.truncate(keep);
    }

    /// Drops trailing bands whose coefficients are all exactly zero.
    pub fn trim_zero_bands(&mut self) {
        let mut b = self.band_count();
        while b > 0
            && self.sh_rest[sh_groups(b - 1)..sh_groups(b)]
                .iter()
                .flatten()
                .all(|v| *v == T::zero())
        {
            b -= 1;
        }
        self.truncate_bands(b);
    }

    /// Zero-fills missing groups up to `bands`.
    pub fn pad_bands(&mut self, bands: usize) {
        let want = sh_groups(bands.min(MAX_BANDS));
        if self.sh_rest.len() < want {
            self.sh_rest.resize(want, [T::zero(); 3]);
        }
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        math::quat_to_mat(math::normalize_quat(self.rotation))
    }

    /// Checks the activated-form invariants; returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let q = self.rotation;
        let qn = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if (qn - T::one()).abs() > T::lit(1e-5) {
            return Err(format!("rotation norm {qn} is not 1"));
        }
        if self
            .scale
            .iter()
            .any(|s| !(*s > T::zero()) || !s.is_finite())
        {
            return Err("scale components must be finite and > 0".into());
        }
        if !(self.opacity >= T::zero() && self.opacity <= T::one()) {
            return Err(format!("opacity {} outside [0,1]", self.opacity));
        }
        if !SH_GROUPS.contains(&self.sh_rest.len()) {
            return Err(format!("sh_rest has {} groups", self.sh_rest.len()));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> GaussianPrimitive<U> {
        let c3 = |v: Vec3<T>| v.map(|x| U::lit(x.as_f64()));
        GaussianPrimitive {
            position: c3(self.position),
            scale: c3(self.scale),
            rotation: self.rotation.map(|x| U::lit(x.as_f64())),
            opacity: U::lit(self.opacity.as_f64()),
            base_color: c3(self.base_color),
            sh_rest: self.sh_rest.iter().map(|g| c3(*g)).collect(),
        }
    }
}

/// Pinhole camera. `rotation` maps world to camera coordinates
/// (`x_cam = R·x_world + t`, camera looks down +z, +y points down in the image).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraView<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
    pub focal_x: T,
    pub focal_y: T,
    pub principal_x: T,
    pub principal_y: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraView<T> {
    /// Camera at `eye` looking at `target`, principal point at the image center.
    pub fn look_at(
        eye: Vec3<T>,
        target: Vec3<T>,
        up: Vec3<T>,
        focal: T,
        width: u32,
        height: u32,
    ) -> Self {
        let rotation = math::look_at(eye, target, up);
        let translation = math::scale(math::mat_vec(&rotation, eye), -T::one());
        Self {
            rotation,
            translation,
            focal_x: focal,
            focal_y: focal,
            principal_x: T::of_usize(width as usize) * T::lit(0.5),
            principal_y: T::of_usize(height as usize) * T::lit(0.5),
            width,
            height,
        }
    }

    #[inline]
    pub fn to_camera(&self, p: Vec3<T>) -> Vec3<T> {
        math::add(math::mat_vec(&self.rotation, p), self.translation)
    }

    /// Camera center in world coordinates, `-Rᵀ·t`.
    pub fn center(&self) -> Vec3<T> {
        math::scale(math::mat_t_vec(&self.rotation, self.translation), -T::one())
    }

    /// Projects a camera-space point to continuous pixel coordinates
    /// (pixel `(i, j)` covers `[i, i+1) × [j, j+1)`).
    #[inline]
    pub fn project(&self, pc: Vec3<T>) -> [T; 2] {
        [
            self.focal_x * pc[0] / pc[2] + self.principal_x,
            self.focal_y * pc[1] / pc[2] + self.principal_y,
        ]
    }

    /// Same camera with intrinsics rescaled so `max(width, height) <= max_dim`.
    pub fn downscaled(&self, max_dim: u32) -> Self {
        let largest = self.width.max(self.height);
        if max_dim == 0 || largest <= max_dim {
            return self.clone();
        }
        let f = max_dim as f64 / largest as f64;
        let w = ((self.width as f64 * f).round() as u32).max(1);
        let h = ((self.height as f64 * f).round() as u32).max(1);
        let sx = T::lit(w as f64 / self.width as f64);
        let sy = T::lit(h as f64 / self.height as f64);
        Self {
            rotation: self.rotation,
            translation: self.translation,
            focal_x: self.focal_x * sx,
            focal_y: self.focal_y * sy,
            principal_x: self.principal_x * sx,
            principal_y: self.principal_y * sy,
            width: w,
            height: h,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if math::orthonormality_error(&self.rotation) > T::lit(1e-5) {
            return Err("rotation is not orthonormal".into());
        }
        if self.width == 0 || self.height == 0 {
            return Err("image size must be positive".into());
        }
        if !(self.focal_x > T::zero() && self.focal_y > T::zero()) {
            return Err("focal lengths must be positive".into());
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> CameraView<U> {
        let c = |x: T| U::lit(x.as_f64());
        CameraView {
            rotation: self.rotation.map(|r| r.map(c)),
            translation: self.translation.map(c),
            focal_x: c(self.focal_x),
            focal_y: c(self.focal_y),
            principal_x: c(self.principal_x),
            principal_y: c(self.principal_y),
            width: self.width,
            height: self.height,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene<T> {
    pub primitives: Vec<GaussianPrimitive<T>>,
    pub views: Vec<CameraView<T>>,
}

impl<T: Real> Scene<T> {
    pub fn new(primitives: Vec<GaussianPrimitive<T>>, views: Vec<CameraView<T>>) -> Self {
        Self { primitives, views }
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Primitive count per band 0..=3.
    pub fn band_histogram(&self) -> [usize; 4] {
        let mut h = [0; 4];
        for p in &self.primitives {
            h[p.band_count()] += 1;
        }
        h
    }

    pub fn cast<U: Real>(&self) -> Scene<U> {
        Scene {
            primitives: self.primitives.iter().map(|p| p.cast()).collect(),
            views: self.views.iter().map(|v| v.cast()).collect(),
        }
    }
}
