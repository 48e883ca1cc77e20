//! Smallest world-space pixel extent at each primitive over all observing views.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scene::{CameraView, GaussianPrimitive};

/// How `a_min` enters the sphere radius.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RadiusMode {
    /// `a_min` is a cube side: `r = a_min·√3/2`.
    #[default]
    Length,
    /// `a_min` is a face area: `r = √a_min·√3/2`.
    Area,
}

/// `a_min` per primitive; `None` when no view sees it.
#[derive(Clone, Debug, PartialEq)]
pub struct FootprintTable<T> {
    pub a_min: Vec<Option<T>>,
    pub visible_views: Vec<u32>,
}

impl<T: Real> FootprintTable<T> {
    pub fn len(&self) -> usize {
        self.a_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_min.is_empty()
    }

    pub fn is_visible(&self, i: usize) -> bool {
        self.a_min[i].is_some()
    }

    pub fn invisible_count(&self) -> usize {
        self.a_min.iter().filter(|a| a.is_none()).count()
    }
}

/// Pixel side length at the primitive's center if it lies inside the view frustum.
pub fn pixel_footprint<T: Real>(view: &CameraView<T>, position: [T; 3], near: T) -> Option<T> {
    let pc = view.to_camera(position);
    if !(pc[2] > near) {
        return None;
    }
    let [u, v] = view.project(pc);
    let (w, h) = (
        T::of_usize(view.width as usize),
        T::of_usize(view.height as usize),
    );
    if !(u >= T::zero() && u < w && v >= T::zero() && v < h) {
        return None;
    }
    Some(pc[2] * (T::one() / view.focal_x).max(T::one() / view.focal_y))
}

pub fn compute_footprints<T: Real>(
    primitives: &[GaussianPrimitive<T>],
    views: &[CameraView<T>],
    near: T,
) -> Result<FootprintTable<T>> {
    if views.is_empty() {
        return Err(Error::InvalidInput(
            "footprints need at least one view".into(),
        ));
    }
    let per: Vec<(Option<T>, u32)> = primitives
        .par_iter()
        .map(|p| {
            let mut best: Option<T> = None;
            let mut count = 0;
            for v in views {
                if let Some(a) = pixel_footprint(v, p.position, near) {
                    count += 1;
                    best = Some(best.map_or(a, |b| b.min(a)));
                }
            }
            (best, count)
        })
        .collect();
    Ok(FootprintTable {
        a_min: per.iter().map(|x| x.0).collect(),
        visible_views: per.iter().map(|x| x.1).collect(),
    })
}

/// Half the diagonal of the cube described by `a_min`.
pub fn sphere_radius<T: Real>(a_min: T, mode: RadiusMode) -> T {
    let side = match mode {
        RadiusMode::Length => a_min,
        RadiusMode::Area => a_min.sqrt(),
    };
    side * T::lit(3.0).sqrt() * T::lit(0.5)
}
