//! Decomposition of polarimetric image stacks — captured under
//! independently rotating linear polarizers on the light source and camera —
//! into unpolarized, forward-rotation, and reverse-rotation components,
//! i.e. diffuse reflection, direct specular reflection, and second-bounce
//! specular inter-reflection.
//!
//! The crate provides:
//!
//! * [`model`] — the closed-form forward observation model;
//! * [`decompose`] — design matrices, the per-pixel linear least-squares
//!   solve, parameter recovery, and a brute-force reference fit;
//! * [`imaging`] — PFM image I/O, capture manifests, exposure-bracket
//!   merging, and polarization-mosaic demosaicing;
//! * [`synthetic`] — analytic ground-truth scenes and stack rendering;
//! * [`separation`] — high-frequency-illumination direct/global separation
//!   and its combination with the polarimetric decomposition;
//! * [`structured_light`] — Gray-code structured light, triangulation, and
//!   the V-groove plane-fit correctness metric.
//!
//! Angles are radians in `[0, π)` internally; degrees appear only in
//! manifests, recipes and CLI flags.

pub mod angle;
pub mod decompose;
pub mod error;
pub mod imaging;
pub mod model;
pub mod separation;
pub mod structured_light;
pub mod synthetic;

pub use error::{Error, Result};
