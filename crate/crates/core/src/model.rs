//! Forward observation model for a scene lit through a rotating linear
//! polarizer and imaged through another.
//!
//! The observed intensity is a mixture of three components distinguished by
//! how their polarization plane responds when the light-side polarizer turns:
//!
//! * **unpolarized** — depolarized light (diffuse reflection, subsurface
//!   scattering); constant with respect to both polarizer angles,
//! * **forward rotation** — direct specular reflection; the plane of
//!   polarization follows the light-side polarizer,
//! * **reverse rotation** — second-bounce specular inter-reflection; the
//!   plane of polarization turns against the light-side polarizer.
//!
//! All functions here are pure and are used by the synthesizer, the solver's
//! residual checks, and the brute-force oracle.

use serde::{Deserialize, Serialize};

use crate::angle::canonical;
use crate::error::{Error, Result};

/// Angles of the camera-side and light-side linear polarizers, radians,
/// stored canonically in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizerPair {
    theta_c: f64,
    theta_l: f64,
}

impl PolarizerPair {
    pub fn new(theta_c: f64, theta_l: f64) -> Result<Self> {
        if !theta_c.is_finite() || !theta_l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "polarizer angles must be finite, got ({theta_c}, {theta_l})"
            )));
        }
        Ok(Self {
            theta_c: canonical(theta_c),
            theta_l: canonical(theta_l),
        })
    }

    pub fn from_degrees(theta_c_deg: f64, theta_l_deg: f64) -> Result<Self> {
        Self::new(theta_c_deg.to_radians(), theta_l_deg.to_radians())
    }

    /// Camera-side polarizer angle, radians in `[0, π)`.
    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }

    /// Light-side polarizer angle, radians in `[0, π)`.
    pub fn theta_l(&self) -> f64 {
        self.theta_l
    }
}

/// The five per-pixel unknowns of the three-component mixture.
///
/// Intensities are non-negative; phases are canonical in `[0, π)` and fixed
/// to 0 by convention when the paired intensity is exactly zero (the phase is
/// undefined there).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComponentParams", into = "RawComponentParams")]
pub struct ComponentParams {
    i_u: f64,
    i_f: f64,
    phi_f: f64,
    i_r: f64,
    phi_r: f64,
}

#[derive(Serialize, Deserialize)]
struct RawComponentParams {
    i_u: f64,
    i_f: f64,
    phi_f: f64,
    i_r: f64,
    phi_r: f64,
}

impl TryFrom<RawComponentParams> for ComponentParams {
    type Error = Error;
    fn try_from(r: RawComponentParams) -> Result<Self> {
        ComponentParams::new(r.i_u, r.i_f, r.phi_f, r.i_r, r.phi_r)
    }
}

impl From<ComponentParams> for RawComponentParams {
    fn from(p: ComponentParams) -> Self {
        RawComponentParams {
            i_u: p.i_u,
            i_f: p.i_f,
            phi_f: p.phi_f,
            i_r: p.i_r,
            phi_r: p.phi_r,
        }
    }
}

impl ComponentParams {
    pub const ZERO: ComponentParams = ComponentParams {
        i_u: 0.0,
        i_f: 0.0,
        phi_f: 0.0,
        i_r: 0.0,
        phi_r: 0.0,
    };

    pub fn new(i_u: f64, i_f: f64, phi_f: f64, i_r: f64, phi_r: f64) -> Result<Self> {
        for (name, v) in [("i_u", i_u), ("i_f", i_f), ("i_r", i_r)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !phi_f.is_finite() || !phi_r.is_finite() {
            return Err(Error::InvalidParameter(
                "phases must be finite".to_string(),
            ));
        }
        Ok(Self::new_unchecked(i_u, i_f, phi_f, i_r, phi_r))
    }

    /// Canonicalizes phases and applies the zero-intensity phase convention
    /// without range checks. Callers guarantee finite, non-negative
    /// intensities.
    pub(crate) fn new_unchecked(i_u: f64, i_f: f64, phi_f: f64, i_r: f64, phi_r: f64) -> Self {
        Self {
            i_u,
            i_f,
            phi_f: if i_f == 0.0 { 0.0 } else { canonical(phi_f) },
            i_r,
            phi_r: if i_r == 0.0 { 0.0 } else { canonical(phi_r) },
        }
    }

    pub fn i_u(&self) -> f64 {
        self.i_u
    }

    pub fn i_f(&self) -> f64 {
        self.i_f
    }

    pub fn phi_f(&self) -> f64 {
        self.phi_f
    }

    pub fn i_r(&self) -> f64 {
        self.i_r
    }

    pub fn phi_r(&self) -> f64 {
        self.phi_r
    }

    /// Sum of the three component intensities.
    pub fn total(&self) -> f64 {
        self.i_u + self.i_f + self.i_r
    }
}

/// A partially linearly polarized ray: intensity, degree of linear
/// polarization (DoLP) and angle of linear polarization (AoLP).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizedRay {
    i_amp: f64,
    rho: f64,
    phi: f64,
}

impl PolarizedRay {
    pub fn new(i_amp: f64, rho: f64, phi: f64) -> Result<Self> {
        if !i_amp.is_finite() || i_amp < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "i_amp must be finite and non-negative, got {i_amp}"
            )));
        }
        if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "degree of linear polarization must lie in [0, 1], got {rho}"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("phi must be finite".to_string()));
        }
        Ok(Self {
            i_amp,
            rho,
            phi: canonical(phi),
        })
    }

    pub fn i_amp(&self) -> f64 {
        self.i_amp
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Intensity seen through a single camera-side polarizer at `theta_c`:
/// `(i_amp / 2) · (ρ·cos 2(θ_c − φ) + 1)`.
///
/// The halving is the attenuation of an ideal linear polarizer; the result
/// lies in `[0, i_amp]`.
pub fn intensity_single_polarizer(ray: &PolarizedRay, theta_c: f64) -> f64 {
    ray.i_amp / 2.0 * (ray.rho * (2.0 * (theta_c - ray.phi)).cos() + 1.0)
}

/// Unpolarized component: `i_u / 2`, independent of both polarizer angles.
pub fn unpolarized_intensity(i_u: f64) -> f64 {
    i_u / 2.0
}

/// Forward-rotation component (direct specular reflection):
/// `(i_f / 2) · (cos 2(θ_c − θ_l − φ_F) + 1)`.
///
/// Invariant under the simultaneous shift `θ_c → θ_c + δ`, `θ_l → θ_l + δ`.
pub fn forward_intensity(i_f: f64, phi_f: f64, pair: PolarizerPair) -> f64 {
    i_f / 2.0 * ((2.0 * (pair.theta_c - pair.theta_l - phi_f)).cos() + 1.0)
}

/// Reverse-rotation component (second-bounce specular inter-reflection):
/// `(i_r / 2) · (cos 2(θ_c + θ_l − φ_R) + 1)`.
///
/// Invariant under the opposite shift `θ_c → θ_c + δ`, `θ_l → θ_l − δ`.
pub fn reverse_intensity(i_r: f64, phi_r: f64, pair: PolarizerPair) -> f64 {
    i_r / 2.0 * ((2.0 * (pair.theta_c + pair.theta_l - phi_r)).cos() + 1.0)
}

/// Full observation: sum of the unpolarized, forward and reverse components.
pub fn mixture_intensity(params: &ComponentParams, pair: PolarizerPair) -> f64 {
    unpolarized_intensity(params.i_u)
        + forward_intensity(params.i_f, params.phi_f, pair)
        + reverse_intensity(params.i_r, params.phi_r, pair)
}
