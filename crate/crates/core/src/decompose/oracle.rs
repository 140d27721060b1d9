//! Derivative-free reference fit of the five component parameters.
//!
//! This oracle minimizes the same sum-of-squares objective as the
//! closed-form solver, but by exhaustive grid search followed by
//! coordinate-descent refinement directly in the physical parameter space.
//! It never touches the linearization, the design matrix, or the recovery
//! formulas, so agreement between the two paths validates both.
//!
//! Fully deterministic for fixed options.

use std::f64::consts::PI;

use crate::angle::canonical;
use crate::error::{Error, Result};
use crate::model::ComponentParams;

use super::AngleSet;

/// Resolution knobs for [`brute_force_fit`].
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Levels of the log-spaced intensity grids used in the descent sweeps.
    pub intensity_levels: usize,
    /// Levels of the phase grids over `[0, π)`.
    pub phase_levels: usize,
    /// Coordinate-descent refinement sweeps.
    pub sweeps: usize,
    /// Interval width at which the local golden-section refinement stops,
    /// relative to the signal scale.
    pub refine_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            intensity_levels: 64,
            phase_levels: 180,
            sweeps: 30,
            refine_tol: 1e-13,
        }
    }
}

struct Objective<'a> {
    intensities: &'a [f64],
    /// 2θ_c − 2θ_l per measurement.
    diff2: Vec<f64>,
    /// 2θ_c + 2θ_l per measurement.
    sum2: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(intensities: &'a [f64], angles: &AngleSet) -> Self {
        let diff2 = angles
            .pairs()
            .iter()
            .map(|p| 2.0 * (p.theta_c() - p.theta_l()))
            .collect();
        let sum2 = angles
            .pairs()
            .iter()
            .map(|p| 2.0 * (p.theta_c() + p.theta_l()))
            .collect();
        Self {
            intensities,
            diff2,
            sum2,
        }
    }

    /// Sum of squared residuals at `q = [i_u, i_f, φ_F, i_r, φ_R]`.
    fn eval(&self, q: &[f64; 5]) -> f64 {
        let mut ss = 0.0;
        for (k, &obs) in self.intensities.iter().enumerate() {
            let m = q[0] / 2.0
                + q[1] / 2.0 * ((self.diff2[k] - 2.0 * q[2]).cos() + 1.0)
                + q[3] / 2.0 * ((self.sum2[k] - 2.0 * q[4]).cos() + 1.0);
            let d = obs - m;
            ss += d * d;
        }
        ss
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..96 {
        if b - a < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Scans the grid for the best cell, then refines inside the bracketing
/// interval. Returns the argmin found.
fn grid_then_golden(f: &impl Fn(f64) -> f64, grid: &[f64], tol: f64) -> f64 {
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let v = f(g);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    if lo == hi {
        return grid[best_i];
    }
    let x = golden_min(f, lo, hi, tol);
    if f(x) <= best_v {
        x
    } else {
        grid[best_i]
    }
}

fn log_grid(lo: f64, hi: f64, levels: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(levels);
    g.push(0.0);
    let n = levels.saturating_sub(1).max(1);
    let (llo, lhi) = (lo.ln(), hi.ln());
    for i in 0..n {
        let t = if n == 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
        g.push((llo + t * (lhi - llo)).exp());
    }
    g
}

fn lin_grid(lo: f64, hi: f64, levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|i| lo + (hi - lo) * i as f64 / (levels - 1).max(1) as f64)
        .collect()
}

/// Fits the five component parameters to raw intensity measurements by
/// exhaustive grid search plus coordinate-descent refinement.
///
/// Each descent sweep minimizes one coordinate at a time over its full-range
/// grid (log-spaced intensities, uniform phases) with golden-section
/// polishing, and finishes with a pattern move along the sweep's combined
/// displacement to cut through the coupling between the intensity
/// coordinates.
pub fn brute_force_fit(
    intensities: &[f64],
    angles: &AngleSet,
    opts: &OracleOptions,
) -> Result<ComponentParams> {
    if intensities.len() != angles.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} intensities for {} angle pairs",
            intensities.len(),
            angles.len()
        )));
    }
    if intensities.len() < 5 {
        return Err(Error::InvalidParameter(
            "brute-force fit needs at least five measurements".to_string(),
        ));
    }
    if intensities.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite intensity in oracle input".to_string(),
        ));
    }

    let imax = intensities.iter().cloned().fold(0.0f64, f64::max);
    if imax <= 0.0 {
        return Ok(ComponentParams::ZERO);
    }
    let obj = Objective::new(intensities, angles);
    let tol = opts.refine_tol * imax.max(1.0);

    // Exhaustive coarse grid over all five parameters. Intensities can reach
    // twice the largest observation (a polarized component contributes at
    // most its full intensity, the unpolarized one half of it).
    let coarse_i = log_grid(imax * 1e-2, 4.0 * imax, 8);
    let coarse_iu: Vec<f64> = coarse_i.iter().step_by(2).cloned().collect();
    let coarse_p = lin_grid(0.0, PI * 11.0 / 12.0, 12);
    let mut best = [0.0; 5];
    let mut best_v = f64::INFINITY;
    for &iu in &coarse_iu {
        for &i_f in &coarse_i {
            for &pf in &coarse_p {
                for &i_r in &coarse_i {
                    for &pr in &coarse_p {
                        let q = [iu, i_f, pf, i_r, pr];
                        let v = obj.eval(&q);
                        if v < best_v {
                            best_v = v;
                            best = q;
                        }
                    }
                }
            }
        }
    }

    let int_grid = log_grid(imax * 1e-4, 5.0 * imax, opts.intensity_levels);
    let phase_grid = lin_grid(
        0.0,
        PI * (opts.phase_levels - 1) as f64 / opts.phase_levels as f64,
        opts.phase_levels,
    );

    let mut p = best;
    for _ in 0..opts.sweeps {
        let before = p;
        for j in 0..5 {
            let f1 = |v: f64| {
                let mut q = p;
                q[j] = v;
                obj.eval(&q)
            };
            if j == 2 || j == 4 {
                let g = grid_then_golden(&f1, &phase_grid, 1e-14);
                // Polish across the wrap point as well.
                let w = 2.0 * PI / opts.phase_levels as f64;
                p[j] = canonical(golden_min(&f1, g - w, g + w, 1e-14));
            } else {
                let g = grid_then_golden(&f1, &int_grid, tol);
                let w = (0.5 * g.abs()).max(1e-3 * imax);
                let local = lin_grid((g - w).max(0.0), g + w, 17);
                p[j] = grid_then_golden(&f1, &local, tol);
            }
        }
        // Pattern move: line search along the sweep displacement.
        let d: Vec<f64> = p.iter().zip(&before).map(|(a, b)| a - b).collect();
        if d.iter().any(|&v| v != 0.0) {
            let along = |t: f64| {
                let mut q = [0.0; 5];
                for (i, qi) in q.iter_mut().enumerate() {
                    *qi = p[i] + t * d[i];
                }
                q[0] = q[0].max(0.0);
                q[1] = q[1].max(0.0);
                q[3] = q[3].max(0.0);
                obj.eval(&q)
            };
            let t = grid_then_golden(&along, &lin_grid(-0.5, 3.0, 36), 1e-14);
            if along(t) < obj.eval(&p) {
                for (i, di) in d.iter().enumerate() {
                    p[i] += t * di;
                }
                p[0] = p[0].max(0.0);
                p[1] = p[1].max(0.0);
                p[3] = p[3].max(0.0);
                p[2] = canonical(p[2]);
                p[4] = canonical(p[4]);
            }
        }
    }

    ComponentParams::new(p[0], p[1], p[2], p[3], p[4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{
        build_design_matrix, decompose_pixel, residual_sum_squares, AngleSet,
    };
    use crate::model::mixture_intensity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn observe(p: &ComponentParams, angles: &AngleSet) -> Vec<f64> {
        angles
            .pairs()
            .iter()
            .map(|&q| mixture_intensity(p, q))
            .collect()
    }

    #[test]
    fn oracle_matches_closed_form_on_fixture() {
        let p = ComponentParams::new(0.4, 0.6, 0.1, 0.2, 1.0).unwrap();
        let angles = AngleSet::pol_cam_2();
        let obs = observe(&p, &angles);
        let fit = brute_force_fit(&obs, &angles, &OracleOptions::default()).unwrap();
        let w = build_design_matrix(&angles).unwrap();
        let closed = decompose_pixel(&w, &obs).unwrap().params;
        assert!((fit.i_u() - closed.i_u()).abs() < 1e-6);
        assert!((fit.i_f() - closed.i_f()).abs() < 1e-6);
        assert!((fit.i_r() - closed.i_r()).abs() < 1e-6);
        assert!(crate::angle::circular_distance(fit.phi_f(), closed.phi_f()) < 1e-6);
        assert!(crate::angle::circular_distance(fit.phi_r(), closed.phi_r()) < 1e-6);
    }

    #[test]
    fn pure_forward_fit_has_no_reverse() {
        let p = ComponentParams::new(0.0, 1.1, 0.7, 0.0, 0.0).unwrap();
        let angles = AngleSet::pol_cam_2();
        let fit =
            brute_force_fit(&observe(&p, &angles), &angles, &OracleOptions::default()).unwrap();
        assert!(fit.i_r() < 1e-6, "i_r = {}", fit.i_r());
        assert!((fit.i_f() - 1.1).abs() < 1e-6);
    }

    #[test]
    fn noisy_fit_residual_nearly_optimal() {
        let angles = AngleSet::pol_cam_2();
        let w = build_design_matrix(&angles).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ComponentParams::new(0.5, 0.9, 0.3, 0.4, 1.2).unwrap();
        let obs: Vec<f64> = observe(&p, &angles)
            .iter()
            .map(|v| v + 1e-3 * rng.random_range(-1.0..1.0))
            .collect();
        let fit = brute_force_fit(&obs, &angles, &OracleOptions::default()).unwrap();
        let closed = decompose_pixel(&w, &obs).unwrap().params;
        let r_fit = residual_sum_squares(&fit, &obs, &angles);
        let r_closed = residual_sum_squares(&closed, &obs, &angles);
        // The closed form is the exact minimizer; the oracle must come
        // within refinement tolerance of its residual.
        assert!(r_closed <= r_fit + 1e-12);
        assert!(r_fit <= r_closed + 1e-9, "{r_fit} vs {r_closed}");
    }

    #[test]
    fn all_dark_input_fits_zero() {
        let angles = AngleSet::pol_cam_2();
        let fit =
            brute_force_fit(&vec![0.0; 8], &angles, &OracleOptions::default()).unwrap();
        assert_eq!(fit, ComponentParams::ZERO);
    }

    #[test]
    fn too_few_measurements_rejected() {
        let angles = AngleSet::new(
            [(0.0, 0.0), (45.0, 45.0), (0.0, 45.0), (45.0, 0.0)]
                .iter()
                .map(|&(c, l)| crate::model::PolarizerPair::from_degrees(c, l).unwrap())
                .collect(),
        )
        .unwrap();
        assert!(brute_force_fit(&[0.1; 4], &angles, &OracleOptions::default()).is_err());
        let full = AngleSet::min5();
        assert!(brute_force_fit(&[0.1; 4], &full, &OracleOptions::default()).is_err());
        assert!(brute_force_fit(&[0.1, 0.2, f64::NAN, 0.1, 0.3], &full, &OracleOptions::default())
            .is_err());
    }
}
