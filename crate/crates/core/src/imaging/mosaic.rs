//! Splitting a polarization-camera mosaic into its four angle channels.
//!
//! A polarization camera tiles the sensor with 2×2 superpixels of micro
//! polarizers. Demosaicing here is nearest-sample at half resolution — no
//! interpolation, so the four channels stay radiometrically independent.

use crate::error::{Error, Result};

use super::FloatImage;

/// The 2×2 superpixel layout as polarizer angles in degrees,
/// `grid[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosaicPattern {
    grid: [[f64; 2]; 2],
}

impl Default for MosaicPattern {
    /// The common sensor layout: 90° and 45° on the even row, 135° and 0°
    /// on the odd row.
    fn default() -> Self {
        Self {
            grid: [[90.0, 45.0], [135.0, 0.0]],
        }
    }
}

impl MosaicPattern {
    pub fn new(grid: [[f64; 2]; 2]) -> Result<Self> {
        let flat = [grid[0][0], grid[0][1], grid[1][0], grid[1][1]];
        for (i, a) in flat.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(
                    "mosaic angles must be finite".to_string(),
                ));
            }
            for b in flat.iter().skip(i + 1) {
                if (a.rem_euclid(180.0) - b.rem_euclid(180.0)).abs() < 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "mosaic angles must be distinct mod 180°, got {a} and {b}"
                    )));
                }
            }
        }
        Ok(Self { grid })
    }

    pub fn angle_deg(&self, row: usize, col: usize) -> f64 {
        self.grid[row][col]
    }
}

/// Splits each 2×2 superpixel into four half-resolution images, one per
/// polarizer angle. Returned in superpixel offset order
/// (0,0), (0,1), (1,0), (1,1), each tagged with its angle in degrees.
pub fn demosaic_polarization(
    raw: &FloatImage,
    pattern: &MosaicPattern,
) -> Result<[(f64, FloatImage); 4]> {
    if raw.channels() != 1 {
        return Err(Error::DimensionMismatch(
            "mosaic frames are single-channel".to_string(),
        ));
    }
    if raw.width() % 2 != 0 || raw.height() % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "mosaic dimensions must be even, got {}x{}",
            raw.width(),
            raw.height()
        )));
    }
    let (hw, hh) = (raw.width() / 2, raw.height() / 2);
    let mut quads: Vec<(f64, FloatImage)> = Vec::with_capacity(4);
    for dy in 0..2 {
        for dx in 0..2 {
            let mut img = FloatImage::new(hw, hh, 1)?;
            for y in 0..hh {
                for x in 0..hw {
                    img.set(x, y, 0, raw.get(2 * x + dx, 2 * y + dy, 0));
                }
            }
            quads.push((pattern.angle_deg(dy, dx), img));
        }
    }
    Ok(quads.try_into().expect("exactly four quadrants"))
}

/// Reassembles a raw mosaic from four half-resolution channel images given in
/// superpixel offset order. Exact inverse of [`demosaic_polarization`].
pub fn interleave_polarization(quads: &[&FloatImage; 4]) -> Result<FloatImage> {
    let (hw, hh) = (quads[0].width(), quads[0].height());
    for q in quads.iter() {
        if q.width() != hw || q.height() != hh || q.channels() != 1 {
            return Err(Error::DimensionMismatch(
                "quadrant images must share a single-channel shape".to_string(),
            ));
        }
    }
    let mut raw = FloatImage::new(hw * 2, hh * 2, 1)?;
    for y in 0..hh {
        for x in 0..hw {
            raw.set(2 * x, 2 * y, 0, quads[0].get(x, y, 0));
            raw.set(2 * x + 1, 2 * y, 0, quads[1].get(x, y, 0));
            raw.set(2 * x, 2 * y + 1, 0, quads[2].get(x, y, 0));
            raw.set(2 * x + 1, 2 * y + 1, 0, quads[3].get(x, y, 0));
        }
    }
    Ok(raw)
}
