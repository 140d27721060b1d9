//! Merging exposure brackets into linear radiance.

use crate::error::{Error, Result};

use super::FloatImage;

/// Merges exposure-bracketed frames into one linear radiance image.
///
/// Per pixel, radiance is the hat-weighted mean of `sample / exposure` over
/// the frames: `w(z) = max(0, min(z, saturation − z))`, which discounts both
/// the noisy toe and the saturated shoulder. Pixels saturated in every frame
/// become NaN; pixels whose weights all vanish on the dark side fall back to
/// the unweighted mean of their unsaturated samples.
pub fn merge_hdr(frames: &[(FloatImage, f64)], saturation_level: f32) -> Result<FloatImage> {
    let (first, _) = frames.first().ok_or_else(|| {
        Error::InvalidParameter("HDR merge needs at least one frame".to_string())
    })?;
    if !(saturation_level > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "saturation level must be positive, got {saturation_level}"
        )));
    }
    for (i, (img, exposure)) in frames.iter().enumerate() {
        if !img.same_shape(first) {
            return Err(Error::DimensionMismatch(format!(
                "frame {i} shape differs from frame 0"
            )));
        }
        if !(*exposure > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frame {i}: exposure must be positive, got {exposure}"
            )));
        }
        for (j, (_, other)) in frames.iter().enumerate().skip(i + 1) {
            if exposure == other {
                return Err(Error::InvalidParameter(format!(
                    "frames {i} and {j} share exposure {exposure}"
                )));
            }
        }
    }

    let mut out = FloatImage::new(first.width(), first.height(), first.channels())?;
    let n = out.data().len();
    for i in 0..n {
        let mut weighted = 0.0f64;
        let mut weight_sum = 0.0f64;
        let mut fallback = 0.0f64;
        let mut unsaturated = 0usize;
        for (img, exposure) in frames {
            let z = img.data()[i];
            if !z.is_finite() {
                continue;
            }
            if z < saturation_level {
                fallback += z as f64 / exposure;
                unsaturated += 1;
            }
            let w = z.min(saturation_level - z).max(0.0) as f64;
            weighted += w * z as f64 / exposure;
            weight_sum += w;
        }
        out.data_mut()[i] = if weight_sum > 0.0 {
            (weighted / weight_sum) as f32
        } else if unsaturated > 0 {
            (fallback / unsaturated as f64) as f32
        } else {
            f32::NAN
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(vals: &[f32]) -> FloatImage {
        FloatImage::from_data(vals.len(), 1, 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn single_frame_is_exact_division() {
        let merged = merge_hdr(&[(img(&[0.0, 0.25, 0.5]), 0.5)], 1.0).unwrap();
        assert_eq!(merged.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn consistent_brackets_agree_with_single_frame() {
        // Same scene at t and 2t, noiseless: z2 = 2*z1 below saturation.
        let t = 0.125;
        let z1 = [0.1f32, 0.2, 0.31];
        let z2: Vec<f32> = z1.iter().map(|v| v * 2.0).collect();
        let merged = merge_hdr(&[(img(&z1), t), (img(&z2), 2.0 * t)], 1.0).unwrap();
        let single = merge_hdr(&[(img(&z1), t)], 1.0).unwrap();
        for (a, b) in merged.data().iter().zip(single.data()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn fully_saturated_pixel_is_masked() {
        let merged = merge_hdr(&[(img(&[1.0, 0.5]), 0.1), (img(&[1.0, 0.9]), 0.2)], 1.0).unwrap();
        assert!(merged.data()[0].is_nan());
        assert!(merged.data()[1].is_finite());
    }

    #[test]
    fn reorder_invariance() {
        let a = (img(&[0.125, 0.5]), 0.25);
        let b = (img(&[0.25, 0.75]), 0.5);
        let ab = merge_hdr(&[a.clone(), b.clone()], 1.0).unwrap();
        let ba = merge_hdr(&[b, a], 1.0).unwrap();
        assert_eq!(ab.data(), ba.data());
    }

    #[test]
    fn rejects_duplicate_exposures_and_mismatch() {
        assert!(merge_hdr(&[(img(&[0.1]), 0.5), (img(&[0.2]), 0.5)], 1.0).is_err());
        let wide = FloatImage::new(2, 1, 1).unwrap();
        assert!(merge_hdr(&[(img(&[0.1]), 0.5), (wide, 0.25)], 1.0).is_err());
    }

    #[test]
    fn dark_pixel_survives_zero_weight() {
        // z = 0 has zero hat weight but is not saturated.
        let merged = merge_hdr(&[(img(&[0.0]), 0.5)], 1.0).unwrap();
        assert_eq!(merged.data()[0], 0.0);
    }
}
