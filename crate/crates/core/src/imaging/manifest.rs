//! Capture manifests: a JSON document binding each frame file to its
//! polarizer angles, exposure, and role in the capture protocol.
//!
//! Frame paths are resolved relative to the manifest's directory. Angles are
//! stored in degrees; conversion to radians happens on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PolarizerPair;

use super::{read_pfm, FloatImage, ImageStack, StackFrame};

/// What a frame contributes to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameRole {
    #[default]
    Regular,
    Graycode,
    Checker,
}

/// One captured frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Path of the frame image, relative to the manifest.
    pub file: String,
    pub theta_c_deg: f64,
    pub theta_l_deg: f64,
    pub exposure_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_id: Option<String>,
    #[serde(default)]
    pub role: FrameRole,
}

impl FrameRecord {
    pub fn pair(&self) -> Result<PolarizerPair> {
        PolarizerPair::from_degrees(self.theta_c_deg, self.theta_l_deg)
    }
}

/// Ordered list of frame records describing one capture session.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CaptureManifest {
    pub frames: Vec<FrameRecord>,
}

impl CaptureManifest {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Manifest("manifest lists no frames".to_string()));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if !f.theta_c_deg.is_finite() || !f.theta_l_deg.is_finite() {
                return Err(Error::Manifest(format!(
                    "frame {i}: non-finite polarizer angle"
                )));
            }
            if !(f.exposure_s > 0.0) {
                return Err(Error::Manifest(format!(
                    "frame {i}: exposure_s must be positive, got {}",
                    f.exposure_s
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: CaptureManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn frame_dir(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or_else(|| Path::new("."))
}

fn load_frame(dir: &Path, record: &FrameRecord) -> Result<StackFrame> {
    let image: FloatImage = read_pfm(&dir.join(&record.file))?;
    Ok(StackFrame {
        image,
        pair: record.pair()?,
    })
}

/// Loads the manifest's `regular`-role frames as one image stack.
pub fn load_stack(manifest_path: &Path) -> Result<ImageStack> {
    let manifest = CaptureManifest::load(manifest_path)?;
    let dir = frame_dir(manifest_path);
    let frames = manifest
        .frames
        .iter()
        .filter(|f| f.role == FrameRole::Regular)
        .map(|f| load_frame(dir, f))
        .collect::<Result<Vec<_>>>()?;
    if frames.is_empty() {
        return Err(Error::Manifest(
            "manifest has no regular-role frames".to_string(),
        ));
    }
    ImageStack::new(frames)
}

/// Loads frames of the given role grouped by `pattern_id`, preserving first
/// appearance order. Each group becomes one stack; every frame of a
/// patterned capture must carry a pattern id.
pub fn load_patterned_stacks(
    manifest_path: &Path,
    role: FrameRole,
) -> Result<Vec<(String, ImageStack)>> {
    let manifest = CaptureManifest::load(manifest_path)?;
    let dir = frame_dir(manifest_path);
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<StackFrame>> = Vec::new();
    for f in manifest.frames.iter().filter(|f| f.role == role) {
        let id = f.pattern_id.clone().ok_or_else(|| {
            Error::Manifest(format!("frame {} lacks a pattern_id", f.file))
        })?;
        let idx = match order.iter().position(|o| *o == id) {
            Some(i) => i,
            None => {
                order.push(id);
                groups.push(Vec::new());
                order.len() - 1
            }
        };
        groups[idx].push(load_frame(dir, f)?);
    }
    if order.is_empty() {
        return Err(Error::Manifest(format!(
            "manifest has no frames with role {role:?}"
        )));
    }
    order
        .into_iter()
        .zip(groups)
        .map(|(id, frames)| Ok((id, ImageStack::new(frames)?)))
        .collect()
}
