//! Core kernels for panoramic whole-house tours: floorplan shells and
//! navigation graphs, the equirectangular camera, room-aware attention
//! masking with circular rotary phases, a CPU Gaussian splat renderer, the
//! progressive Gaussian cache, procedural texture stand-ins and evaluation
//! metrics.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is
//! disabled. The `parallel` feature enables rayon for per-pixel loops;
//! results are identical with and without it.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attnmask;
pub mod cache;
mod error;
pub mod evalmetrics;
pub mod gaussians;
pub mod math;
pub mod oracle;
pub mod panocam;
mod par;
pub mod scenegraph;

pub use error::{Error, Result};
pub use math::{Mat3, Quat, Vec3};
