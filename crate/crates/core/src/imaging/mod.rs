//! Image containers and capture ingestion: float images, portable-float-map
//! I/O, capture manifests, exposure-bracket merging, and polarization-mosaic
//! demosaicing.

mod hdr;
mod manifest;
mod mosaic;
mod pfm;

pub use hdr::merge_hdr;
pub use manifest::{
    load_patterned_stacks, load_stack, CaptureManifest, FrameRecord, FrameRole,
};
pub use mosaic::{demosaic_polarization, interleave_polarization, MosaicPattern};
pub use pfm::{read_pfm, read_pfm_from, write_pfm, write_pfm_to};

use crate::error::{Error, Result};
use crate::model::PolarizerPair;

/// A row-major 32-bit float image on a linear radiometric scale, 1 or 3
/// channels. Values are finite except for explicitly NaN-masked pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FloatImage {
    /// A zero-filled image.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::constant(width, height, channels, 0.0)
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        check_shape(width, height, channels)?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        })
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_shape(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn same_shape(&self, other: &FloatImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }

    /// Quantile of the finite samples, `q` in [0, 1]. NaN-masked samples are
    /// ignored; returns 0 for an all-masked image.
    pub fn quantile(&self, q: f64) -> f32 {
        let mut v: Vec<f32> = self.data.iter().cloned().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let idx = ((v.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
        v[idx]
    }
}

fn check_shape(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::DimensionMismatch(format!(
            "unsupported channel count {channels}; expected 1 or 3"
        )));
    }
    Ok(())
}

/// One co-registered frame of an image stack with its polarizer angles.
#[derive(Debug, Clone)]
pub struct StackFrame {
    pub image: FloatImage,
    pub pair: PolarizerPair,
}

/// Co-registered frames acquired under different polarizer-angle pairs.
#[derive(Debug, Clone)]
pub struct ImageStack {
    frames: Vec<StackFrame>,
}

impl ImageStack {
    pub fn new(frames: Vec<StackFrame>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| {
            Error::InvalidParameter("image stack must contain at least one frame".to_string())
        })?;
        let shape = (
            first.image.width(),
            first.image.height(),
            first.image.channels(),
        );
        for (k, f) in frames.iter().enumerate() {
            let s = (f.image.width(), f.image.height(), f.image.channels());
            if s != shape {
                return Err(Error::DimensionMismatch(format!(
                    "frame {k} is {}x{}x{}, expected {}x{}x{}",
                    s.0, s.1, s.2, shape.0, shape.1, shape.2
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[StackFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].image.width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].image.height()
    }

    /// The stack's angle sequence in frame order. Repeated pairs are kept
    /// (capture protocols may average repeats).
    pub fn angle_set(&self) -> Result<super::decompose::AngleSet> {
        super::decompose::AngleSet::with_repeats(self.frames.iter().map(|f| f.pair).collect())
    }

    /// Per-pixel mean over the frames — the decomposition-free intensity
    /// estimate. NaN-masked samples poison their pixel.
    pub fn mean_frame(&self) -> FloatImage {
        let mut out = self.frames[0].image.clone();
        for frame in &self.frames[1..] {
            for (o, v) in out.data_mut().iter_mut().zip(frame.image.data()) {
                *o += v;
            }
        }
        let inv = 1.0 / self.frames.len() as f32;
        for v in out.data_mut() {
            *v *= inv;
        }
        out
    }
}
