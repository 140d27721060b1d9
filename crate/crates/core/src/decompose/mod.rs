//! Closed-form decomposition of polarimetric measurements into the three
//! mixture components.
//!
//! The mixture model is linear in five reparameterized unknowns. Writing
//! `c_F = cos 2φ_F`, `s_F = sin 2φ_F` (and likewise for the reverse
//! component), each observation satisfies `I(θ_c, θ_l) = w(θ_c, θ_l) · X`
//! with the design vector
//!
//! ```text
//! w = [1, cos2θ_c·cos2θ_l, sin2θ_c·sin2θ_l, cos2θ_c·sin2θ_l, sin2θ_c·cos2θ_l]
//! ```
//!
//! and, expanding the three component models,
//!
//! ```text
//! x1 = (I_U + I_F + I_R) / 2
//! x2 = ( I_F·c_F + I_R·c_R) / 2      x3 = ( I_F·c_F − I_R·c_R) / 2
//! x4 = (−I_F·s_F + I_R·s_R) / 2      x5 = ( I_F·s_F + I_R·s_R) / 2
//! ```
//!
//! Stacking N measurements row-wise gives `I = W·X`, solved by the
//! pseudo-inverse of `W`; the component parameters are then recovered from
//! `X` via
//!
//! ```text
//! I_F·c_F = x2 + x3    I_F·s_F = x5 − x4
//! I_R·c_R = x2 − x3    I_R·s_R = x4 + x5
//! I_U = 2·x1 − I_F − I_R
//! ```
//!
//! The forward/reverse assignment in these formulas is pinned empirically by
//! the pure-component tests: a signal synthesized with only a forward term
//! must decompose with `I_R = 0` and vice versa.

mod oracle;

pub use oracle::{brute_force_fit, OracleOptions};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::angle::canonical;
use crate::error::{Error, Result};
use crate::imaging::{FloatImage, ImageStack};
use crate::model::{mixture_intensity, ComponentParams, PolarizerPair};

/// Relative singular-value threshold below which a direction is treated as
/// unobservable: σ_i ≤ `RANK_REL_TOL`·σ_max does not count toward the rank.
pub const RANK_REL_TOL: f64 = 1e-10;

/// The five trigonometric coefficients linking one measurement to the
/// linearized unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignVector(pub [f64; 5]);

/// Builds the design vector for one polarizer-angle pair.
pub fn design_vector(pair: PolarizerPair) -> DesignVector {
    let (sc, cc) = (2.0 * pair.theta_c()).sin_cos();
    let (sl, cl) = (2.0 * pair.theta_l()).sin_cos();
    DesignVector([1.0, cc * cl, sc * sl, cc * sl, sc * cl])
}

/// An ordered list of polarizer-angle pairs defining a measurement sequence.
///
/// Duplicate pairs (after canonicalization) are rejected by [`AngleSet::new`];
/// use [`AngleSet::with_repeats`] when deliberately averaging repeated
/// measurements against noise.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    pairs: Vec<PolarizerPair>,
}

/// Camera angles of a four-directional polarization mosaic, degrees.
pub const POL_CAM_CAMERA_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

impl AngleSet {
    pub fn new(pairs: Vec<PolarizerPair>) -> Result<Self> {
        let set = Self::with_repeats(pairs)?;
        for i in 0..set.pairs.len() {
            for j in i + 1..set.pairs.len() {
                if set.pairs[i] == set.pairs[j] {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate polarizer pair at indices {i} and {j}; \
                         use with_repeats to average repeated measurements"
                    )));
                }
            }
        }
        Ok(set)
    }

    pub fn with_repeats(pairs: Vec<PolarizerPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter(
                "angle set must contain at least one pair".to_string(),
            ));
        }
        Ok(Self { pairs })
    }

    /// Cross product of camera and light angles given in degrees,
    /// light-major order.
    pub fn cross_degrees(camera_deg: &[f64], light_deg: &[f64]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(camera_deg.len() * light_deg.len());
        for &l in light_deg {
            for &c in camera_deg {
                pairs.push(PolarizerPair::from_degrees(c, l)?);
            }
        }
        Self::new(pairs)
    }

    /// The minimal five-pair set for a conventional camera:
    /// {(0,0), (45,45), (0,45), (45,0), (90,0)} degrees.
    pub fn min5() -> Self {
        let pairs = [(0.0, 0.0), (45.0, 45.0), (0.0, 45.0), (45.0, 0.0), (90.0, 0.0)]
            .iter()
            .map(|&(c, l)| PolarizerPair::from_degrees(c, l).unwrap())
            .collect();
        Self::new(pairs).unwrap()
    }

    /// Polarization-camera set with the given light-side angles (degrees):
    /// one four-directional mosaic shot per light angle.
    pub fn polarization_camera(light_deg: &[f64]) -> Result<Self> {
        Self::cross_degrees(&POL_CAM_CAMERA_DEG, light_deg)
    }

    /// Polarization camera with two light angles {0, 45}°, 8 measurements.
    pub fn pol_cam_2() -> Self {
        Self::polarization_camera(&[0.0, 45.0]).unwrap()
    }

    /// Polarization camera with four light angles {0, 45, 90, 135}°,
    /// 16 measurements.
    pub fn pol_cam_4() -> Self {
        Self::polarization_camera(&[0.0, 45.0, 90.0, 135.0]).unwrap()
    }

    pub fn pairs(&self) -> &[PolarizerPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Result of checking an angle set against the solvability requirements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSetReport {
    /// Number of measurements in the set.
    pub n: usize,
    /// Numerical rank of the stacked design matrix (≤ 5).
    pub rank: usize,
    /// Condition number σ_max/σ_min; ∞ when rank < 5.
    pub cond: f64,
    /// True when the set determines all five unknowns.
    pub minimal: bool,
}

/// Checks whether an angle set spans the five unknowns. Never fails;
/// degenerate sets are reported, not rejected.
pub fn validate_angle_set(angles: &AngleSet) -> AngleSetReport {
    let rows = stack_rows(angles);
    let (rank, cond) = rank_and_cond(&rows);
    AngleSetReport {
        n: angles.len(),
        rank,
        cond,
        minimal: rank == 5,
    }
}

fn stack_rows(angles: &AngleSet) -> DMatrix<f64> {
    let n = angles.len();
    let mut rows = DMatrix::zeros(n, 5);
    for (k, &pair) in angles.pairs().iter().enumerate() {
        let DesignVector(w) = design_vector(pair);
        for (j, &v) in w.iter().enumerate() {
            rows[(k, j)] = v;
        }
    }
    rows
}

fn rank_and_cond(rows: &DMatrix<f64>) -> (usize, f64) {
    let svd = rows.clone().svd(false, false);
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    if s_max == 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = sigma.iter().filter(|&&s| s > RANK_REL_TOL * s_max).count();
    // Fewer than five singular values (N < 5) means the remaining ones are
    // implicitly zero.
    if rank < 5 || sigma.len() < 5 {
        return (rank.min(sigma.len()), f64::INFINITY);
    }
    let s_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    (rank, s_max / s_min)
}

/// The row-stacked design matrix with its precomputed pseudo-inverse.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    rows: DMatrix<f64>,
    pinv: DMatrix<f64>,
    cond: f64,
    rank: usize,
}

/// Stacks the design vectors of `angles` and computes the pseudo-inverse via
/// SVD. Fails with [`Error::DegenerateAngleSet`] when the set does not span
/// all five unknowns.
pub fn build_design_matrix(angles: &AngleSet) -> Result<DesignMatrix> {
    let rows = stack_rows(angles);
    let svd = rows.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let s_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let rank = sigma.iter().filter(|&&s| s > RANK_REL_TOL * s_max).count();
    if rank < 5 || sigma.len() < 5 {
        return Err(Error::DegenerateAngleSet {
            rank: rank.min(sigma.len()),
        });
    }
    let s_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let u = svd.u.as_ref().expect("SVD computed with u");
    let v_t = svd.v_t.as_ref().expect("SVD computed with v_t");
    // pinv = V Σ⁻¹ Uᵀ
    let mut sigma_inv_ut = u.transpose();
    for (i, &s) in sigma.iter().enumerate() {
        for v in sigma_inv_ut.row_mut(i).iter_mut() {
            *v /= s;
        }
    }
    let pinv = v_t.transpose() * sigma_inv_ut;
    Ok(DesignMatrix {
        rows,
        pinv,
        cond: s_max / s_min,
        rank,
    })
}

impl DesignMatrix {
    /// Number of measurements (rows).
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    /// The N×5 stacked design vectors in measurement order.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// The 5×N pseudo-inverse.
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Condition number σ_max/σ_min of the stacked matrix; transpose-invariant.
    pub fn condition_number(&self) -> f64 {
        self.cond
    }
}

/// The linearized unknowns `[x1..x5]` solved from one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionVector(pub [f64; 5]);

/// Solves `X = W⁺·I` for one measurement vector.
///
/// With exactly five independent measurements this is the exact solution;
/// with more it is the least-squares minimizer of the residual.
pub fn solve_linear(w: &DesignMatrix, intensities: &[f64]) -> Result<SolutionVector> {
    if intensities.len() != w.n() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} intensities, got {}",
            w.n(),
            intensities.len()
        )));
    }
    if let Some(bad) = intensities.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite intensity {bad}; mask the pixel instead"
        )));
    }
    Ok(SolutionVector(solve_unchecked(w, intensities)))
}

fn solve_unchecked(w: &DesignMatrix, intensities: &[f64]) -> [f64; 5] {
    let pinv = &w.pinv;
    let mut x = [0.0; 5];
    for (j, xj) in x.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &v) in intensities.iter().enumerate() {
            acc += pinv[(j, k)] * v;
        }
        *xj = acc;
    }
    x
}

/// Component parameters recovered from a solved pixel.
///
/// Under noise the recovered unpolarized intensity `2·x1 − I_F − I_R` can
/// come out negative; the raw value is preserved here next to the clamped
/// [`ComponentParams`] so that noise-floor problems stay visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredParams {
    /// Parameters with `i_u` clamped to zero from below.
    pub params: ComponentParams,
    /// Unclamped unpolarized intensity.
    pub i_u_raw: f64,
    /// True when the raw solution was already physical (`i_u_raw ≥ 0`).
    pub physical: bool,
}

/// Recovers the five component parameters from the linearized solution.
///
/// Phases come from the two-argument arctangent, halved and canonicalized to
/// `[0, π)`; a single-argument arctan would lose a quadrant and break the
/// round trip. Components with exactly zero intensity report phase 0.
pub fn extract_components(x: &SolutionVector) -> RecoveredParams {
    let [x1, x2, x3, x4, x5] = x.0;
    let (fc, fs) = (x2 + x3, x5 - x4);
    let (rc, rs) = (x2 - x3, x4 + x5);
    let i_f = fc.hypot(fs);
    let phi_f = if i_f == 0.0 {
        0.0
    } else {
        canonical(0.5 * fs.atan2(fc))
    };
    let i_r = rc.hypot(rs);
    let phi_r = if i_r == 0.0 {
        0.0
    } else {
        canonical(0.5 * rs.atan2(rc))
    };
    let i_u_raw = 2.0 * x1 - i_f - i_r;
    RecoveredParams {
        params: ComponentParams::new_unchecked(i_u_raw.max(0.0), i_f, phi_f, i_r, phi_r),
        i_u_raw,
        physical: i_u_raw >= 0.0,
    }
}

/// Convenience: solve and extract in one step.
pub fn decompose_pixel(w: &DesignMatrix, intensities: &[f64]) -> Result<RecoveredParams> {
    let x = solve_linear(w, intensities)?;
    Ok(extract_components(&x))
}

/// Sum of squared residuals of `params` against the observed intensities —
/// the objective minimized by both the closed-form solve and the oracle.
pub fn residual_sum_squares(
    params: &ComponentParams,
    intensities: &[f64],
    angles: &AngleSet,
) -> f64 {
    intensities
        .iter()
        .zip(angles.pairs())
        .map(|(&v, &pair)| {
            let d = v - mixture_intensity(params, pair);
            d * d
        })
        .sum()
}

/// Per-pixel decomposition of an image stack.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Unpolarized intensity, clamped at zero.
    pub i_u: FloatImage,
    /// Unpolarized intensity before clamping (negative under noise).
    pub i_u_raw: FloatImage,
    /// Forward-rotation intensity.
    pub i_f: FloatImage,
    /// Reverse-rotation intensity.
    pub i_r: FloatImage,
    /// Forward phase, radians in [0, π).
    pub phi_f: FloatImage,
    /// Reverse phase, radians in [0, π).
    pub phi_r: FloatImage,
    /// Per-pixel RMS of the fit residual.
    pub residual_rms: FloatImage,
    /// 1.0 where the pixel was solved, 0.0 where masked out.
    pub mask: FloatImage,
}

impl Decomposition {
    pub fn width(&self) -> usize {
        self.i_u.width()
    }

    pub fn height(&self) -> usize {
        self.i_u.height()
    }

    /// Recovered parameters at one pixel, or `None` where masked.
    pub fn params_at(&self, x: usize, y: usize) -> Option<ComponentParams> {
        if self.mask.get(x, y, 0) == 0.0 {
            return None;
        }
        Some(ComponentParams::new_unchecked(
            self.i_u.get(x, y, 0) as f64,
            self.i_f.get(x, y, 0) as f64,
            self.phi_f.get(x, y, 0) as f64,
            self.i_r.get(x, y, 0) as f64,
            self.phi_r.get(x, y, 0) as f64,
        ))
    }
}

/// Decomposes every pixel of the stack independently.
///
/// Pixels carrying a non-finite sample in any frame (e.g. NaN-masked
/// saturation) are flagged invalid in the mask and skipped; they never abort
/// the rest of the image.
pub fn decompose_stack(stack: &ImageStack) -> Result<Decomposition> {
    let angles = stack.angle_set()?;
    let w = build_design_matrix(&angles)?;
    decompose_stack_with(stack, &w)
}

/// [`decompose_stack`] with a caller-supplied design matrix (reused across
/// stacks sharing one angle set).
pub fn decompose_stack_with(stack: &ImageStack, w: &DesignMatrix) -> Result<Decomposition> {
    if stack.len() != w.n() {
        return Err(Error::DimensionMismatch(format!(
            "stack has {} frames but design matrix expects {}",
            stack.len(),
            w.n()
        )));
    }
    for (k, frame) in stack.frames().iter().enumerate() {
        if frame.image.channels() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "frame {k} has {} channels; decomposition expects single-channel frames",
                frame.image.channels()
            )));
        }
    }
    let (width, height) = (stack.width(), stack.height());
    let n = stack.len();

    // 8 planes per pixel: i_u, i_u_raw, i_f, i_r, phi_f, phi_r, residual, mask
    let frames = stack.frames();
    let rows_out: Vec<[Vec<f32>; 8]> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut planes: [Vec<f32>; 8] = std::array::from_fn(|_| vec![0.0f32; width]);
            let mut values = vec![0.0f64; n];
            for x in 0..width {
                let i = y * width + x;
                for (k, frame) in frames.iter().enumerate() {
                    values[k] = frame.image.data()[i] as f64;
                }
                if values.iter().any(|v| !v.is_finite()) {
                    for plane in planes.iter_mut().take(7) {
                        plane[x] = f32::NAN;
                    }
                    planes[7][x] = 0.0;
                    continue;
                }
                let sol = solve_unchecked(w, &values);
                let rec = extract_components(&SolutionVector(sol));
                let mut ss = 0.0;
                for (k, &v) in values.iter().enumerate() {
                    let mut fit = 0.0;
                    for (j, &xj) in sol.iter().enumerate() {
                        fit += w.rows[(k, j)] * xj;
                    }
                    let d = v - fit;
                    ss += d * d;
                }
                let p = rec.params;
                planes[0][x] = p.i_u() as f32;
                planes[1][x] = rec.i_u_raw as f32;
                planes[2][x] = p.i_f() as f32;
                planes[3][x] = p.i_r() as f32;
                planes[4][x] = p.phi_f() as f32;
                planes[5][x] = p.phi_r() as f32;
                planes[6][x] = (ss / n as f64).sqrt() as f32;
                planes[7][x] = 1.0;
            }
            planes
        })
        .collect();

    let mut images: Vec<FloatImage> = (0..8)
        .map(|_| FloatImage::new(width, height, 1))
        .collect::<Result<_>>()?;
    for (y, planes) in rows_out.iter().enumerate() {
        for (img, plane) in images.iter_mut().zip(planes.iter()) {
            img.data_mut()[y * width..(y + 1) * width].copy_from_slice(plane);
        }
    }
    let mut it = images.into_iter();
    Ok(Decomposition {
        i_u: it.next().unwrap(),
        i_u_raw: it.next().unwrap(),
        i_f: it.next().unwrap(),
        i_r: it.next().unwrap(),
        phi_f: it.next().unwrap(),
        phi_r: it.next().unwrap(),
        residual_rms: it.next().unwrap(),
        mask: it.next().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolarizerPair;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pair_deg(c: f64, l: f64) -> PolarizerPair {
        PolarizerPair::from_degrees(c, l).unwrap()
    }

    #[test]
    fn design_vector_axis_cases() {
        assert_eq!(design_vector(pair_deg(0.0, 0.0)).0, [1.0, 1.0, 0.0, 0.0, 0.0]);
        let w45 = design_vector(pair_deg(45.0, 45.0)).0;
        assert!((w45[1]).abs() < 1e-15 && (w45[2] - 1.0).abs() < 1e-15);
        assert!(w45[3].abs() < 1e-15 && w45[4].abs() < 1e-15);
        let w90 = design_vector(pair_deg(90.0, 0.0)).0;
        assert!((w90[1] + 1.0).abs() < 1e-15);
        assert!(w90[2].abs() < 1e-15 && w90[3].abs() < 1e-15 && w90[4].abs() < 1e-15);
    }

    #[test]
    fn design_vector_entries_bounded() {
        for i in 0..97 {
            let p = PolarizerPair::new(i as f64 * 0.13, i as f64 * 0.41).unwrap();
            let w = design_vector(p).0;
            assert_eq!(w[0], 1.0);
            assert!(w.iter().skip(1).all(|v| v.abs() <= 1.0));
        }
    }

    /// The five-pair minimal set is full-rank with κ ≈ 3.99; the analytic
    /// value is √((3+√7)/(3−√7)) from the eigenvalues {2, 1, 1, 3±√7} of
    /// WᵀW.
    #[test]
    fn min5_condition_number() {
        let w = build_design_matrix(&AngleSet::min5()).unwrap();
        assert_eq!(w.rank(), 5);
        let analytic = ((3.0 + 7f64.sqrt()) / (3.0 - 7f64.sqrt())).sqrt();
        assert_relative_eq!(w.condition_number(), analytic, epsilon = 1e-9);
        assert!((w.condition_number() - 3.99).abs() < 0.01);
    }

    /// The 8-measurement polarization-camera set has κ = 2 exactly
    /// (WᵀW = diag(8, 2, 2, 2, 2)).
    #[test]
    fn pol_cam_2_condition_number() {
        let w = build_design_matrix(&AngleSet::pol_cam_2()).unwrap();
        assert_eq!(w.n(), 8);
        assert_relative_eq!(w.condition_number(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn pinv_times_rows_is_identity() {
        for set in [AngleSet::min5(), AngleSet::pol_cam_2(), AngleSet::pol_cam_4()] {
            let w = build_design_matrix(&set).unwrap();
            let prod = w.pinv() * w.rows();
            for i in 0..5 {
                for j in 0..5 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn condition_number_is_transpose_invariant() {
        let rows = stack_rows(&AngleSet::min5());
        let (_, cond) = rank_and_cond(&rows);
        let (_, cond_t) = rank_and_cond(&rows.transpose());
        assert_relative_eq!(cond, cond_t, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_rows_have_condition_one() {
        let (rank, cond) = rank_and_cond(&DMatrix::identity(5, 5));
        assert_eq!(rank, 5);
        assert_relative_eq!(cond, 1.0, epsilon = 1e-12);
    }

    /// Any set with constant θ_l collapses two column pairs to rank 3.
    #[test]
    fn constant_light_angle_is_rank_three() {
        for tl in [0.0, 17.0, 45.0, 101.5] {
            let pairs: Vec<PolarizerPair> = (0..7)
                .map(|i| pair_deg(i as f64 * 23.0, tl))
                .collect();
            let set = AngleSet::new(pairs).unwrap();
            let report = validate_angle_set(&set);
            assert!(report.rank <= 3, "θ_l = {tl}: rank {}", report.rank);
            assert!(!report.minimal);
            assert!(report.cond.is_infinite());
            assert!(matches!(
                build_design_matrix(&set),
                Err(Error::DegenerateAngleSet { rank }) if rank <= 3
            ));
        }
    }

    #[test]
    fn four_pairs_are_never_minimal() {
        let pairs = vec![
            pair_deg(0.0, 0.0),
            pair_deg(30.0, 60.0),
            pair_deg(75.0, 20.0),
            pair_deg(120.0, 111.0),
        ];
        let report = validate_angle_set(&AngleSet::new(pairs).unwrap());
        assert!(report.rank <= 4);
        assert!(!report.minimal);
    }

    #[test]
    fn validate_reports_minimal_sets() {
        let r5 = validate_angle_set(&AngleSet::min5());
        assert_eq!((r5.n, r5.rank, r5.minimal), (5, 5, true));
        let r8 = validate_angle_set(&AngleSet::pol_cam_2());
        assert_eq!((r8.n, r8.rank, r8.minimal), (8, 5, true));
        assert_relative_eq!(r8.cond, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn duplicate_pairs_rejected_unless_repeats_allowed() {
        let pairs = vec![pair_deg(0.0, 0.0), pair_deg(180.0, 0.0)]; // same after canonicalization
        assert!(AngleSet::new(pairs.clone()).is_err());
        assert!(AngleSet::with_repeats(pairs).is_ok());
    }

    #[test]
    fn constant_signal_solves_to_pure_unpolarized() {
        let w = build_design_matrix(&AngleSet::min5()).unwrap();
        let c = 0.37;
        let x = solve_linear(&w, &vec![c; 5]).unwrap();
        assert_relative_eq!(x.0[0], c, epsilon = 1e-12);
        for v in &x.0[1..] {
            assert!(v.abs() < 1e-12);
        }
        let rec = extract_components(&x);
        assert_relative_eq!(rec.params.i_u(), 2.0 * c, epsilon = 1e-12);
        assert!(rec.params.i_f() < 1e-12);
        assert!(rec.params.i_r() < 1e-12);
        assert!(rec.physical);
    }

    /// The canonical fixture solved over the 8-row set must reproduce the
    /// symbolic linearization of the component models.
    #[test]
    fn fixture_solution_matches_symbolic_linearization() {
        let params = ComponentParams::new(0.4, 0.6, 0.1, 0.2, 1.0).unwrap();
        let angles = AngleSet::pol_cam_2();
        let w = build_design_matrix(&angles).unwrap();
        let intensities: Vec<f64> = angles
            .pairs()
            .iter()
            .map(|&p| mixture_intensity(&params, p))
            .collect();
        let x = solve_linear(&w, &intensities).unwrap();

        let (cf, sf) = ((2.0 * 0.1f64).cos(), (2.0 * 0.1f64).sin());
        let (cr, sr) = ((2.0 * 1.0f64).cos(), (2.0 * 1.0f64).sin());
        let expected = [
            (0.4 + 0.6 + 0.2) / 2.0,
            (0.6 * cf + 0.2 * cr) / 2.0,
            (0.6 * cf - 0.2 * cr) / 2.0,
            (-0.6 * sf + 0.2 * sr) / 2.0,
            (0.6 * sf + 0.2 * sr) / 2.0,
        ];
        for (a, e) in x.0.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }

        let rec = extract_components(&x);
        assert_relative_eq!(rec.params.i_u(), 0.4, epsilon = 1e-9);
        assert_relative_eq!(rec.params.i_f(), 0.6, epsilon = 1e-9);
        assert_relative_eq!(rec.params.phi_f(), 0.1, epsilon = 1e-9);
        assert_relative_eq!(rec.params.i_r(), 0.2, epsilon = 1e-9);
        assert_relative_eq!(rec.params.phi_r(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn extraction_keeps_energy_identity() {
        // i_u_raw + i_f + i_r = 2·x1 by construction.
        let x = SolutionVector([0.9, 0.3, -0.2, 0.15, 0.4]);
        let rec = extract_components(&x);
        let lhs = rec.i_u_raw + rec.params.i_f() + rec.params.i_r();
        assert_relative_eq!(lhs, 2.0 * x.0[0], epsilon = 1e-14);
    }

    #[test]
    fn negative_unpolarized_is_reported_raw_and_clamped() {
        // x1 too small for the polarized magnitudes: raw i_u < 0.
        let x = SolutionVector([0.1, 0.5, 0.5, 0.0, 0.0]);
        let rec = extract_components(&x);
        assert!(rec.i_u_raw < 0.0);
        assert_eq!(rec.params.i_u(), 0.0);
        assert!(!rec.physical);
    }

    #[test]
    fn solve_rejects_bad_input() {
        let w = build_design_matrix(&AngleSet::min5()).unwrap();
        assert!(solve_linear(&w, &[1.0; 4]).is_err());
        assert!(solve_linear(&w, &[1.0, 2.0, f64::NAN, 0.0, 1.0]).is_err());
    }

    #[test]
    fn phases_canonical_and_quadrant_aware() {
        // A forward-only signal with φ_F in every quadrant of 2φ.
        let angles = AngleSet::pol_cam_2();
        let w = build_design_matrix(&angles).unwrap();
        for phi in [0.0, 0.4, PI / 2.0, 2.2, PI - 1e-3] {
            let p = ComponentParams::new(0.0, 1.0, phi, 0.0, 0.0).unwrap();
            let obs: Vec<f64> = angles
                .pairs()
                .iter()
                .map(|&q| mixture_intensity(&p, q))
                .collect();
            let rec = extract_components(&solve_linear(&w, &obs).unwrap());
            assert!(
                crate::angle::circular_distance(rec.params.phi_f(), phi) < 1e-9,
                "phi = {phi} recovered as {}",
                rec.params.phi_f()
            );
            assert!(rec.params.i_r() < 1e-12);
        }
    }
}
