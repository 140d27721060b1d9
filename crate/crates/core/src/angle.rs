//! Angle helpers for the π-periodic quantities used throughout the crate.
//!
//! A linear polarizer and an angle of linear polarization both have period π,
//! so every orientation is stored canonically in `[0, π)`. All internal
//! arithmetic is in radians; degrees appear only at I/O boundaries.

use std::f64::consts::PI;

/// Maps an angle onto the canonical range `[0, π)`.
///
/// Idempotent: `canonical(canonical(a)) == canonical(a)`.
pub fn canonical(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(PI);
    // rem_euclid may round up to exactly π for tiny negative inputs.
    if a >= PI {
        a -= PI;
    }
    a
}

/// Distance between two canonical angles on the π-circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (canonical(a) - canonical(b)).abs();
    d.min(PI - d)
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
