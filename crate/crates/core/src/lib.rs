//! Phasor-field reconstruction for non-line-of-sight imaging.
//!
//! The crate simulates transient scene responses `H(x_p -> x_c, t)` for small hidden
//! scenes, propagates virtual phasor-field waves through them and images the hidden
//! volume with photo, transient and confocal virtual cameras. A filtered-backprojection
//! baseline is included for comparison.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below fix the
//! common `f64` instantiations.

pub mod analysis;
pub mod cameras;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod phasor;
pub mod scalar;
pub mod signal;
pub mod wavefield;

pub use error::{NlosError, Result};
pub use scalar::Real;

pub type Vec3d = geometry::Vec3<f64>;
pub type ApertureGrid64 = geometry::ApertureGrid<f64>;
pub type TimeBase64 = geometry::TimeBase<f64>;
pub type VolumeGrid64 = geometry::VolumeGrid<f64>;
pub type ResponseTensor64 = forward::ResponseTensor<f64>;
pub type ResponseTensor32 = forward::ResponseTensor<f32>;
pub type Scene64 = forward::Scene<f64>;
pub type PhasorWaveform64 = phasor::PhasorWaveform<f64>;
pub type CameraField64 = wavefield::CameraField<f64>;
pub type PlaneField64 = wavefield::PlaneField<f64>;
