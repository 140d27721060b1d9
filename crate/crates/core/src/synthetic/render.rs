//! Rendering observation stacks from ground-truth scenes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::decompose::AngleSet;
use crate::error::{Error, Result};
use crate::imaging::{FloatImage, ImageStack, StackFrame};
use crate::model::{forward_intensity, mixture_intensity, reverse_intensity, unpolarized_intensity};

use super::{GroundTruthScene, NoiseSpec, PatternResponse};

/// Renders one frame per angle pair under full illumination:
/// `frame_k[p] = mixture(params[p], pair_k) (+ third bounce) + noise`.
pub fn render_observations(
    scene: &GroundTruthScene,
    angles: &AngleSet,
    noise: &NoiseSpec,
) -> Result<ImageStack> {
    noise.validate()?;
    let mut frames = Vec::with_capacity(angles.len());
    let mut rng = noise_rng(noise);
    for &pair in angles.pairs() {
        let mut img = FloatImage::new(scene.width(), scene.height(), 1)?;
        for (i, p) in scene.params().iter().enumerate() {
            let mut v = mixture_intensity(p, pair);
            if let Some(third) = scene.third_bounce() {
                v += forward_intensity(third.intensity[i], third.phase[i], pair);
            }
            img.data_mut()[i] = v as f32;
        }
        add_noise(&mut img, noise, &mut rng);
        frames.push(StackFrame { image: img, pair });
    }
    ImageStack::new(frames)
}

/// Renders one stack per projector pattern.
///
/// Each component term scales by its own sample of the pattern: the forward
/// term by the pattern value at `direct_map[p]`, the reverse term by the
/// value at `source_map[p]` (so inter-reflection carries the wrong
/// projector code), and the unpolarized term by its footprint response
/// centered at `direct_map[p]`. Rendering is linear in the pattern.
pub fn render_patterned(
    scene: &GroundTruthScene,
    angles: &AngleSet,
    patterns: &[FloatImage],
    noise: &NoiseSpec,
) -> Result<Vec<ImageStack>> {
    noise.validate()?;
    if patterns.is_empty() {
        return Err(Error::InvalidParameter(
            "render_patterned needs at least one pattern".to_string(),
        ));
    }
    for (i, p) in patterns.iter().enumerate() {
        if p.width() != scene.proj_width() || p.height() != scene.proj_height() {
            return Err(Error::DimensionMismatch(format!(
                "pattern {i} is {}x{}, projector is {}x{}",
                p.width(),
                p.height(),
                scene.proj_width(),
                scene.proj_height()
            )));
        }
        if p.channels() != 1 {
            return Err(Error::DimensionMismatch(
                "projector patterns are single-channel".to_string(),
            ));
        }
    }

    let mut rng = noise_rng(noise);
    let mut stacks = Vec::with_capacity(patterns.len());
    for pattern in patterns {
        let mut frames = Vec::with_capacity(angles.len());
        for &pair in angles.pairs() {
            let mut img = FloatImage::new(scene.width(), scene.height(), 1)?;
            for (i, p) in scene.params().iter().enumerate() {
                let direct = scene.direct_map()[i];
                let s_fwd = sample(pattern, PatternResponse::Point, direct);
                let s_unpol = sample(pattern, scene.unpol_response()[i], direct);
                let mut v = unpolarized_intensity(p.i_u()) * s_unpol
                    + forward_intensity(p.i_f(), p.phi_f(), pair) * s_fwd;
                if let Some(src) = scene.source_map()[i] {
                    let s_rev = sample(pattern, scene.reverse_response()[i], src);
                    v += reverse_intensity(p.i_r(), p.phi_r(), pair) * s_rev;
                }
                if let Some(third) = scene.third_bounce() {
                    let s3 = sample(pattern, PatternResponse::Point, third.source[i]);
                    v += forward_intensity(third.intensity[i], third.phase[i], pair) * s3;
                }
                img.data_mut()[i] = v as f32;
            }
            add_noise(&mut img, noise, &mut rng);
            frames.push(StackFrame { image: img, pair });
        }
        stacks.push(ImageStack::new(frames)?);
    }
    Ok(stacks)
}

fn sample(pattern: &FloatImage, response: PatternResponse, at: (u32, u32)) -> f64 {
    match response {
        PatternResponse::Point => pattern.get(at.0 as usize, at.1 as usize, 0) as f64,
        PatternResponse::Mean { radius } => {
            let r = radius as i64;
            let (w, h) = (pattern.width() as i64, pattern.height() as i64);
            let mut sum = 0.0f64;
            // Half-open window of side 2r, wrapped at the projector edges.
            for dy in -r..r {
                for dx in -r..r {
                    let x = (at.0 as i64 + dx).rem_euclid(w) as usize;
                    let y = (at.1 as i64 + dy).rem_euclid(h) as usize;
                    sum += pattern.get(x, y, 0) as f64;
                }
            }
            sum / ((2 * r) * (2 * r)) as f64
        }
    }
}

fn noise_rng(noise: &NoiseSpec) -> Option<(ChaCha8Rng, Normal<f64>)> {
    if noise.sigma > 0.0 {
        Some((
            ChaCha8Rng::seed_from_u64(noise.seed),
            Normal::new(0.0, noise.sigma).expect("validated sigma"),
        ))
    } else {
        None
    }
}

fn add_noise(img: &mut FloatImage, _noise: &NoiseSpec, rng: &mut Option<(ChaCha8Rng, Normal<f64>)>) {
    if let Some((rng, normal)) = rng {
        for v in img.data_mut() {
            *v += normal.sample(rng) as f32;
        }
    }
}
