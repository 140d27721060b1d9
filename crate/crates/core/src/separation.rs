//! High-frequency illumination direct/global separation and its combination
//! with the polarimetric decomposition.
//!
//! Checker patterns with activated fraction 1/2 split radiance per pixel
//! into `direct = L_max − L_min` and `global = 2·L_min` over the pattern
//! phases. Applying that split to every polarimetric frame first, then
//! decomposing the direct and global stacks separately, yields the
//! {direct, global} × {I_U, I_F, I_R} analysis grid.

use serde::{Deserialize, Serialize};

use crate::decompose::{decompose_stack, Decomposition};
use crate::error::{Error, Result};
use crate::imaging::{FloatImage, ImageStack, StackFrame};

/// Checker illumination: square tiles of `period` pixels, activated
/// fraction 1/2, `n_phases` complementary/shifted phases.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CheckerSpec {
    pub period: u32,
    pub n_phases: u32,
}

impl Default for CheckerSpec {
    fn default() -> Self {
        Self { period: 8, n_phases: 2 }
    }
}

/// Generates the phase-shifted checker patterns. Phase 0 is the plain
/// checkerboard, phase 1 its complement; further phases shift along x by
/// one period per step.
pub fn checker_patterns(
    proj_width: usize,
    proj_height: usize,
    spec: &CheckerSpec,
) -> Result<Vec<FloatImage>> {
    if spec.period == 0 || spec.n_phases < 2 {
        return Err(Error::InvalidParameter(
            "checker needs period ≥ 1 and at least two phases".to_string(),
        ));
    }
    let k = spec.period as usize;
    let mut patterns = Vec::with_capacity(spec.n_phases as usize);
    for phase in 0..spec.n_phases as usize {
        let mut img = FloatImage::new(proj_width, proj_height, 1)?;
        // Phases 0/1 are complements; later phases slide along x.
        let (invert, shift) = (phase % 2 == 1, (phase / 2) * k);
        for y in 0..proj_height {
            for x in 0..proj_width {
                let cell = ((x + shift) / k + y / k) % 2 == 0;
                img.set(x, y, 0, if cell != invert { 1.0 } else { 0.0 });
            }
        }
        patterns.push(img);
    }
    Ok(patterns)
}

/// Splits per-phase images of one illumination state into direct and global
/// components: per pixel, `direct = L_max − L_min`, `global = 2·L_min`.
/// NaN-masked samples propagate to both outputs.
pub fn nayar_separate(per_phase: &[&FloatImage]) -> Result<(FloatImage, FloatImage)> {
    if per_phase.len() < 2 {
        return Err(Error::InvalidParameter(
            "direct/global separation needs at least two pattern phases".to_string(),
        ));
    }
    let first = per_phase[0];
    for (i, img) in per_phase.iter().enumerate() {
        if !img.same_shape(first) {
            return Err(Error::DimensionMismatch(format!(
                "phase image {i} differs in shape"
            )));
        }
    }
    let mut direct = FloatImage::new(first.width(), first.height(), first.channels())?;
    let mut global = FloatImage::new(first.width(), first.height(), first.channels())?;
    for i in 0..first.data().len() {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        let mut masked = false;
        for img in per_phase {
            let v = img.data()[i];
            if !v.is_finite() {
                masked = true;
                break;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if masked {
            direct.data_mut()[i] = f32::NAN;
            global.data_mut()[i] = f32::NAN;
        } else {
            direct.data_mut()[i] = (hi - lo).max(0.0);
            global.data_mut()[i] = 2.0 * lo;
        }
    }
    Ok((direct, global))
}

/// One polarimetric stack per checker phase, all sharing dimensions and the
/// angle sequence.
#[derive(Debug, Clone)]
pub struct PatternedStack {
    pub phases: Vec<ImageStack>,
    pub checker: CheckerSpec,
}

impl PatternedStack {
    pub fn new(phases: Vec<ImageStack>, checker: CheckerSpec) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::InvalidParameter(
                "patterned stack needs at least two phases".to_string(),
            ));
        }
        let first = &phases[0];
        for (i, s) in phases.iter().enumerate() {
            if s.width() != first.width()
                || s.height() != first.height()
                || s.len() != first.len()
            {
                return Err(Error::DimensionMismatch(format!(
                    "phase stack {i} differs in shape or frame count"
                )));
            }
            for (k, (a, b)) in s.frames().iter().zip(first.frames()).enumerate() {
                if a.pair != b.pair {
                    return Err(Error::DimensionMismatch(format!(
                        "phase stack {i} frame {k} has mismatched polarizer angles"
                    )));
                }
            }
        }
        Ok(Self { phases, checker })
    }
}

/// The direct/global × component analysis grid.
#[derive(Debug, Clone)]
pub struct CombinedGrid {
    pub direct: Decomposition,
    pub global: Decomposition,
}

impl CombinedGrid {
    /// Sum over unmasked pixels of one grid cell.
    pub fn cell_energy(img: &FloatImage) -> f64 {
        img.data()
            .iter()
            .filter(|v| v.is_finite())
            .map(|&v| v as f64)
            .sum()
    }
}

/// Separates each polarimetric frame into direct and global parts across the
/// checker phases, then decomposes the two resulting stacks.
pub fn combined_decompose(patterned: &PatternedStack) -> Result<CombinedGrid> {
    let n_frames = patterned.phases[0].len();
    let mut direct_frames = Vec::with_capacity(n_frames);
    let mut global_frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let per_phase: Vec<&FloatImage> = patterned
            .phases
            .iter()
            .map(|s| &s.frames()[k].image)
            .collect();
        let (direct, global) = nayar_separate(&per_phase)?;
        let pair = patterned.phases[0].frames()[k].pair;
        direct_frames.push(StackFrame { image: direct, pair });
        global_frames.push(StackFrame { image: global, pair });
    }
    Ok(CombinedGrid {
        direct: decompose_stack(&ImageStack::new(direct_frames)?)?,
        global: decompose_stack(&ImageStack::new(global_frames)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(vals: &[f32]) -> FloatImage {
        FloatImage::from_data(vals.len(), 1, 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn pure_direct_and_pure_global_pixels() {
        // Pixel 0: pure direct d=0.6 (on in one phase only).
        // Pixel 1: pure global g=0.4 (half power in both phases).
        // Pixel 2: mixed d=0.6, g=0.4.
        let phase1 = img(&[0.6, 0.2, 0.8]);
        let phase2 = img(&[0.0, 0.2, 0.2]);
        let (direct, global) = nayar_separate(&[&phase1, &phase2]).unwrap();
        assert_eq!(direct.data(), &[0.6, 0.0, 0.6]);
        let g: Vec<f32> = global.data().to_vec();
        assert!((g[0] - 0.0).abs() < 1e-6);
        assert!((g[1] - 0.4).abs() < 1e-6);
        assert!((g[2] - 0.4).abs() < 1e-6);
    }

    #[test]
    fn energy_split_sums_to_full_illumination() {
        // For two complementary phases, direct + global = phase1 + phase2.
        let phase1 = img(&[0.31, 0.5, 0.125]);
        let phase2 = img(&[0.11, 0.25, 0.5]);
        let (direct, global) = nayar_separate(&[&phase1, &phase2]).unwrap();
        for i in 0..3 {
            let full = phase1.data()[i] + phase2.data()[i];
            assert!((direct.data()[i] + global.data()[i] - full).abs() < 1e-9);
        }
    }

    #[test]
    fn single_phase_rejected() {
        let a = img(&[1.0]);
        assert!(nayar_separate(&[&a]).is_err());
    }

    #[test]
    fn masked_sample_propagates() {
        let a = img(&[f32::NAN]);
        let b = img(&[1.0]);
        let (direct, global) = nayar_separate(&[&a, &b]).unwrap();
        assert!(direct.data()[0].is_nan());
        assert!(global.data()[0].is_nan());
    }

    #[test]
    fn checker_phases_are_complementary_half_fraction() {
        let patterns = checker_patterns(32, 32, &CheckerSpec::default()).unwrap();
        assert_eq!(patterns.len(), 2);
        let mut on = 0usize;
        for (a, b) in patterns[0].data().iter().zip(patterns[1].data()) {
            assert_eq!(a + b, 1.0);
            on += (*a == 1.0) as usize;
        }
        assert_eq!(on, 32 * 32 / 2);
    }
}
