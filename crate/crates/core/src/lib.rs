//! Post-training compression for 3D Gaussian splatting scenes.
//!
//! Redundancy pruning, per-primitive SH band culling and codebook
//! quantization, with a CPU rasterizer for statistics and evaluation.

pub mod error;
pub mod io;
pub mod math;
pub mod pipeline;
pub mod prune;
pub mod quant;
pub mod raster;
pub mod scalar;
pub mod scene;
pub mod sh;

pub use error::{Error, Result};
pub use scalar::Real;
pub use scene::{CameraView, GaussianPrimitive, Scene};

pub type Primitive = GaussianPrimitive<f32>;
pub type Primitive64 = GaussianPrimitive<f64>;
pub type View = CameraView<f32>;
pub type View64 = CameraView<f64>;
pub type Scene32 = Scene<f32>;
pub type Scene64 = Scene<f64>;
