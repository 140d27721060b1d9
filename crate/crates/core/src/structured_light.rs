//! Gray-code structured light: pattern generation, per-pixel decoding,
//! rectified triangulation, and the plane-fit correctness metric for
//! V-groove targets.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::imaging::FloatImage;

/// Reflected binary code of `n`: consecutive integers differ in one bit.
pub fn gray_encode(n: u32) -> u32 {
    n ^ (n >> 1)
}

/// Inverse of [`gray_encode`], as a prefix-xor fold.
pub fn gray_decode(g: u32) -> u32 {
    let mut n = g;
    let mut shift = 1;
    while shift < 32 {
        n ^= n >> shift;
        shift <<= 1;
    }
    n
}

/// A full set of column-coding projector patterns: one bit plane and its
/// exact complement per bit.
#[derive(Debug, Clone)]
pub struct GrayCodeSet {
    pub n_bits: u32,
    /// `(pattern, inverse)` per bit, most significant bit first.
    pub patterns: Vec<(FloatImage, FloatImage)>,
    pub proj_width: usize,
    pub proj_height: usize,
}

/// Generates the bit-plane patterns: projector column `c` is white in bit
/// plane `b` iff bit `b` of `gray_encode(c)` is set; each plane is paired
/// with its complement.
pub fn generate_patterns(n_bits: u32, proj_width: usize, proj_height: usize) -> Result<GrayCodeSet> {
    if n_bits == 0 || n_bits > 31 {
        return Err(Error::InvalidParameter(format!(
            "n_bits must be in 1..=31, got {n_bits}"
        )));
    }
    if proj_width == 0 || proj_height == 0 {
        return Err(Error::InvalidParameter(
            "projector dimensions must be positive".to_string(),
        ));
    }
    if (1u64 << n_bits) < proj_width as u64 {
        return Err(Error::InvalidParameter(format!(
            "{n_bits} bits cover {} columns < projector width {proj_width}",
            1u64 << n_bits
        )));
    }
    let mut patterns = Vec::with_capacity(n_bits as usize);
    for bit in (0..n_bits).rev() {
        let mut plane = FloatImage::new(proj_width, proj_height, 1)?;
        let mut inverse = FloatImage::new(proj_width, proj_height, 1)?;
        for x in 0..proj_width {
            let on = (gray_encode(x as u32) >> bit) & 1 == 1;
            for y in 0..proj_height {
                plane.set(x, y, 0, if on { 1.0 } else { 0.0 });
                inverse.set(x, y, 0, if on { 0.0 } else { 1.0 });
            }
        }
        patterns.push((plane, inverse));
    }
    Ok(GrayCodeSet {
        n_bits,
        patterns,
        proj_width,
        proj_height,
    })
}

/// Decoded projector column per camera pixel.
#[derive(Debug, Clone)]
pub struct CorrespondenceMap {
    pub width: usize,
    pub height: usize,
    /// Decoded projector column, or `None` where decoding was unreliable.
    pub columns: Vec<Option<u32>>,
    /// Minimum pattern-vs-inverse contrast over the bits.
    pub confidence: Vec<f32>,
}

impl CorrespondenceMap {
    pub fn column(&self, x: usize, y: usize) -> Option<u32> {
        self.columns[y * self.width + x]
    }

    pub fn valid_fraction(&self) -> f64 {
        let valid = self.columns.iter().filter(|c| c.is_some()).count();
        valid as f64 / self.columns.len().max(1) as f64
    }

    /// Decoded columns as a float image, NaN where invalid.
    pub fn to_image(&self) -> FloatImage {
        let data = self
            .columns
            .iter()
            .map(|c| c.map(|v| v as f32).unwrap_or(f32::NAN))
            .collect();
        FloatImage::from_data(self.width, self.height, 1, data).expect("map dims are valid")
    }
}

/// Decodes camera images captured under each bit plane and its inverse.
///
/// Bit `b` is 1 where the plane image outshines its inverse. A pixel is
/// invalidated when any bit's contrast `|plane − inverse|` falls below
/// `threshold`, or when the decoded column lies beyond `max_column`.
/// Images arrive most significant bit first, matching
/// [`GrayCodeSet::patterns`].
pub fn decode(
    bit_images: &[(FloatImage, FloatImage)],
    max_column: u32,
    threshold: f32,
) -> Result<CorrespondenceMap> {
    let (first, _) = bit_images.first().ok_or_else(|| {
        Error::InvalidParameter("decode needs at least one bit plane".to_string())
    })?;
    let (width, height) = (first.width(), first.height());
    let n_bits = bit_images.len() as u32;
    for (i, (a, b)) in bit_images.iter().enumerate() {
        if !a.same_shape(first) || !b.same_shape(a) {
            return Err(Error::DimensionMismatch(format!(
                "bit {i}: pattern/inverse images disagree in shape"
            )));
        }
    }
    let mut columns = vec![None; width * height];
    let mut confidence = vec![0.0f32; width * height];
    for i in 0..width * height {
        let mut code: u32 = 0;
        let mut min_contrast = f32::INFINITY;
        let mut ok = true;
        for (a, b) in bit_images {
            let (va, vb) = (a.data()[i], b.data()[i]);
            if !va.is_finite() || !vb.is_finite() {
                ok = false;
                break;
            }
            let contrast = (va - vb).abs();
            min_contrast = min_contrast.min(contrast);
            code = (code << 1) | u32::from(va > vb);
        }
        if !ok || min_contrast < threshold {
            confidence[i] = if ok { min_contrast } else { 0.0 };
            continue;
        }
        let column = gray_decode(code);
        confidence[i] = min_contrast;
        if column < max_column {
            columns[i] = Some(column);
        }
    }
    let _ = n_bits;
    Ok(CorrespondenceMap {
        width,
        height,
        columns,
        confidence,
    })
}

/// Rectified pinhole camera/projector pair: shared focal length, principal
/// points, and a baseline along +x. Depth follows `z = f·b / disparity` with
/// `disparity = (x_cam − cx) − (col − proj_cx)`.
#[derive(Debug, Clone, Copy)]
pub struct RigCalibration {
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub proj_cx: f64,
    pub proj_cy: f64,
    pub baseline_mm: f64,
}

impl RigCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_px > 0.0) || !(self.baseline_mm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "focal ({}) and baseline ({}) must be positive",
                self.focal_px, self.baseline_mm
            )));
        }
        Ok(())
    }
}

/// Triangulates valid correspondences into camera-frame 3D points (mm).
/// Invalid pixels and non-positive disparities are dropped, never fatal.
pub fn triangulate(map: &CorrespondenceMap, calib: &RigCalibration) -> Result<Vec<[f64; 3]>> {
    calib.validate()?;
    let mut cloud = Vec::new();
    for y in 0..map.height {
        for x in 0..map.width {
            let Some(col) = map.column(x, y) else {
                continue;
            };
            let disparity = (x as f64 - calib.cx) - (col as f64 - calib.proj_cx);
            if disparity <= 0.0 {
                continue;
            }
            let z = calib.focal_px * calib.baseline_mm / disparity;
            let px = (x as f64 - calib.cx) * z / calib.focal_px;
            let py = (y as f64 - calib.cy) * z / calib.focal_px;
            cloud.push([px, py, z]);
        }
    }
    Ok(cloud)
}

/// A plane `normal · p + offset = 0` with unit normal.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Plane {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidParameter(
                "plane normal must be non-zero and finite".to_string(),
            ));
        }
        Ok(Self {
            normal: [normal[0] / len, normal[1] / len, normal[2] / len],
            offset: offset / len,
        })
    }

    pub fn distance(&self, p: &[f64; 3]) -> f64 {
        (self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] + self.offset).abs()
    }

    /// Total least-squares plane through the points (needs ≥ 3 points in
    /// general position).
    pub fn fit(points: &[[f64; 3]]) -> Result<Plane> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "plane fit needs at least 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len() as f64;
        let mut centroid = Vector3::zeros();
        for p in points {
            centroid += Vector3::new(p[0], p[1], p[2]);
        }
        centroid /= n;
        let mut cov = Matrix3::zeros();
        for p in points {
            let d = Vector3::new(p[0], p[1], p[2]) - centroid;
            cov += d * d.transpose();
        }
        let eig = cov.symmetric_eigen();
        let mut min_i = 0;
        for i in 1..3 {
            if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
                min_i = i;
            }
        }
        let normal = eig.eigenvectors.column(min_i);
        Plane::new(
            [normal[0], normal[1], normal[2]],
            -normal.dot(&centroid),
        )
    }
}

/// Ground truth for the V-groove correctness metric: either the two known
/// planes, or a request to fit one plane per side of the split.
#[derive(Debug, Clone)]
pub enum GrooveSpec {
    Planes([Plane; 2]),
    /// Fit two planes by least squares to the points on each side of
    /// `x = split_x_mm`.
    FitTwoRegions { split_x_mm: f64 },
}

/// Fraction of cloud points within `tol_mm` of the nearer groove plane.
///
/// An empty cloud yields 0 by definition; callers that care should check
/// and warn.
pub fn plane_fit_metric(cloud: &[[f64; 3]], groove: &GrooveSpec, tol_mm: f64) -> Result<f64> {
    if cloud.is_empty() {
        return Ok(0.0);
    }
    let planes: [Plane; 2] = match groove {
        GrooveSpec::Planes(p) => *p,
        GrooveSpec::FitTwoRegions { split_x_mm } => {
            let left: Vec<[f64; 3]> = cloud
                .iter()
                .filter(|p| p[0] < *split_x_mm)
                .cloned()
                .collect();
            let right: Vec<[f64; 3]> = cloud
                .iter()
                .filter(|p| p[0] >= *split_x_mm)
                .cloned()
                .collect();
            [Plane::fit(&left)?, Plane::fit(&right)?]
        }
    };
    let correct = cloud
        .iter()
        .filter(|p| planes[0].distance(p).min(planes[1].distance(p)) <= tol_mm)
        .count();
    Ok(correct as f64 / cloud.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_code_basics() {
        assert_eq!(gray_encode(0), 0);
        assert_eq!(gray_encode(5), 7);
        for n in 0..1024 {
            assert_eq!(gray_decode(gray_encode(n)), n);
        }
        // Adjacent codes differ in exactly one bit.
        for n in 0..1023u32 {
            assert_eq!((gray_encode(n) ^ gray_encode(n + 1)).count_ones(), 1);
        }
    }

    #[test]
    fn patterns_complement_and_follow_bits() {
        let set = generate_patterns(3, 8, 2).unwrap();
        assert_eq!(set.patterns.len(), 3);
        for (plane, inverse) in &set.patterns {
            for (a, b) in plane.data().iter().zip(inverse.data()) {
                assert_eq!(a + b, 1.0);
            }
        }
        // Column 5 encodes to 7 = 111b: white in every plane.
        for (plane, _) in &set.patterns {
            assert_eq!(plane.get(5, 0, 0), 1.0);
        }
        // n_bits=1, width 2: single plane [black, white].
        let tiny = generate_patterns(1, 2, 1).unwrap();
        assert_eq!(tiny.patterns[0].0.data(), &[0.0, 1.0]);
    }

    #[test]
    fn insufficient_bits_rejected() {
        assert!(generate_patterns(3, 9, 1).is_err());
        assert!(generate_patterns(0, 1, 1).is_err());
    }

    #[test]
    fn decode_recovers_columns_from_clean_patterns() {
        let set = generate_patterns(4, 16, 3).unwrap();
        // Treat the projector patterns themselves as the camera images.
        let map = decode(&set.patterns, 16, 0.5).unwrap();
        assert_eq!(map.valid_fraction(), 1.0);
        for x in 0..16 {
            assert_eq!(map.column(x, 1), Some(x as u32));
        }
    }

    #[test]
    fn all_equal_images_are_invalid() {
        let a = FloatImage::constant(4, 4, 1, 0.5).unwrap();
        let map = decode(&[(a.clone(), a)], 16, 0.01).unwrap();
        assert_eq!(map.valid_fraction(), 0.0);
    }

    #[test]
    fn triangulate_recovers_plane_depth() {
        // Constant disparity = frontoparallel plane at z0.
        let calib = RigCalibration {
            focal_px: 600.0,
            cx: 7.5,
            cy: 7.5,
            proj_cx: 512.0,
            proj_cy: 7.5,
            baseline_mm: 100.0,
        };
        let z0 = 240.0;
        let disparity = calib.focal_px * calib.baseline_mm / z0;
        let mut columns = Vec::new();
        for y in 0..16 {
            for x in 0..16 {
                let _ = y;
                let col = (x as f64 - calib.cx) - disparity + calib.proj_cx;
                columns.push(Some(col.round() as u32));
            }
        }
        let map = CorrespondenceMap {
            width: 16,
            height: 16,
            columns,
            confidence: vec![1.0; 256],
        };
        let cloud = triangulate(&map, &calib).unwrap();
        assert_eq!(cloud.len(), 256);
        // Column quantization moves depth by at most ~z²/(f·b) per half column.
        let dz_per_col = z0 * z0 / (calib.focal_px * calib.baseline_mm);
        for p in &cloud {
            assert!((p[2] - z0).abs() <= 0.6 * dz_per_col, "z = {}", p[2]);
        }
    }

    #[test]
    fn invalid_and_zero_disparity_dropped() {
        let calib = RigCalibration {
            focal_px: 100.0,
            cx: 0.0,
            cy: 0.0,
            proj_cx: 0.0,
            proj_cy: 0.0,
            baseline_mm: 10.0,
        };
        let map = CorrespondenceMap {
            width: 2,
            height: 1,
            columns: vec![None, Some(1)], // disparity = (1-0)-(1-0) = 0
            confidence: vec![0.0, 1.0],
        };
        assert!(triangulate(&map, &calib).unwrap().is_empty());
    }

    #[test]
    fn metric_counts_points_near_planes() {
        let planes = [
            Plane::new([0.0, 0.0, 1.0], -100.0).unwrap(), // z = 100
            Plane::new([0.0, 0.0, 1.0], -200.0).unwrap(), // z = 200
        ];
        let spec = GrooveSpec::Planes(planes);
        let on = vec![[0.0, 0.0, 100.0], [5.0, 1.0, 200.0]];
        assert_eq!(plane_fit_metric(&on, &spec, 1.0).unwrap(), 1.0);
        let off = vec![[0.0, 0.0, 102.0], [0.0, 0.0, 197.5]];
        assert_eq!(plane_fit_metric(&off, &spec, 1.0).unwrap(), 0.0);
        assert_eq!(plane_fit_metric(&[], &spec, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_region_fit_matches_known_planes() {
        // Points on z = 300 - x (x<0) and z = 300 + ... build a V.
        let mut cloud = Vec::new();
        for i in 0..50 {
            let x = -25.0 + i as f64;
            let z = 300.0 - x.abs();
            for j in 0..3 {
                cloud.push([x, j as f64 * 5.0, z]);
            }
        }
        let fit = GrooveSpec::FitTwoRegions { split_x_mm: 0.0 };
        let m = plane_fit_metric(&cloud, &fit, 0.1).unwrap();
        assert!(m > 0.95, "metric {m}");
    }
}
