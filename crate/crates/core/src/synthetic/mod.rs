//! Analytic ground-truth scenes and observation synthesis.
//!
//! Scenes carry per-pixel component parameters plus the projector-pixel maps
//! needed for structured-light experiments: `direct_map` names the projector
//! pixel feeding each pixel's forward component, `source_map` the projector
//! pixel whose light arrives via the second bounce — the mechanism by which
//! inter-reflection carries the *wrong* projector code.

mod render;

pub use render::{render_observations, render_patterned};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::FloatImage;
use crate::model::ComponentParams;
use crate::structured_light::{Plane, RigCalibration};

/// Additive Gaussian sensor noise; identical seeds give identical stacks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// How a component term samples a projected pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternResponse {
    /// Sharp response: the value of one projector pixel.
    Point,
    /// Blurred response: the mean over a half-open square window of side
    /// `2·radius` centered at the feeding pixel, wrapping at projector
    /// edges. With `radius` equal to the checker period this averages any
    /// fraction-1/2 checker to exactly one half.
    Mean { radius: u32 },
}

/// Third-bounce light: a second forward-rotating term with its own source
/// pixel, indistinguishable from direct reflection by rotation direction.
#[derive(Debug, Clone)]
pub struct ThirdBounce {
    pub intensity: Vec<f64>,
    pub phase: Vec<f64>,
    pub source: Vec<(u32, u32)>,
}

/// Rig geometry attached to scenes generated from a 3D recipe.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    pub rig: RigCalibration,
    /// The two groove faces in camera coordinates (mm).
    pub planes: [Plane; 2],
    /// Per-pixel surface depth (mm).
    pub depth_mm: Vec<f64>,
}

/// Per-pixel ground truth for synthesis and oracle checks.
#[derive(Debug, Clone)]
pub struct GroundTruthScene {
    width: usize,
    height: usize,
    proj_width: usize,
    proj_height: usize,
    params: Vec<ComponentParams>,
    direct_map: Vec<(u32, u32)>,
    source_map: Vec<Option<(u32, u32)>>,
    unpol_response: Vec<PatternResponse>,
    reverse_response: Vec<PatternResponse>,
    third: Option<ThirdBounce>,
    geometry: Option<SceneGeometry>,
}

impl GroundTruthScene {
    #[allow(clippy::too_many_arguments)]
    fn new(
        width: usize,
        height: usize,
        proj_width: usize,
        proj_height: usize,
        params: Vec<ComponentParams>,
        direct_map: Vec<(u32, u32)>,
        source_map: Vec<Option<(u32, u32)>>,
        unpol_response: Vec<PatternResponse>,
        reverse_response: Vec<PatternResponse>,
        third: Option<ThirdBounce>,
        geometry: Option<SceneGeometry>,
    ) -> Result<Self> {
        let n = width * height;
        if params.len() != n
            || direct_map.len() != n
            || source_map.len() != n
            || unpol_response.len() != n
            || reverse_response.len() != n
        {
            return Err(Error::DimensionMismatch(
                "scene maps must all be width*height".to_string(),
            ));
        }
        for (i, p) in params.iter().enumerate() {
            if p.i_r() > 0.0 && source_map[i].is_none() {
                return Err(Error::InvalidParameter(format!(
                    "pixel {i} has i_r > 0 but no source_map entry"
                )));
            }
        }
        let in_proj = |(x, y): (u32, u32)| (x as usize) < proj_width && (y as usize) < proj_height;
        if !direct_map.iter().all(|&c| in_proj(c))
            || !source_map.iter().flatten().all(|&c| in_proj(c))
        {
            return Err(Error::InvalidParameter(
                "projector maps exceed projector dimensions".to_string(),
            ));
        }
        Ok(Self {
            width,
            height,
            proj_width,
            proj_height,
            params,
            direct_map,
            source_map,
            unpol_response,
            reverse_response,
            third,
            geometry,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn proj_width(&self) -> usize {
        self.proj_width
    }

    pub fn proj_height(&self) -> usize {
        self.proj_height
    }

    pub fn params(&self) -> &[ComponentParams] {
        &self.params
    }

    pub fn params_at(&self, x: usize, y: usize) -> ComponentParams {
        self.params[y * self.width + x]
    }

    pub fn direct_map(&self) -> &[(u32, u32)] {
        &self.direct_map
    }

    pub fn source_map(&self) -> &[Option<(u32, u32)>] {
        &self.source_map
    }

    pub fn unpol_response(&self) -> &[PatternResponse] {
        &self.unpol_response
    }

    pub fn reverse_response(&self) -> &[PatternResponse] {
        &self.reverse_response
    }

    pub fn third_bounce(&self) -> Option<&ThirdBounce> {
        self.third.as_ref()
    }

    pub fn geometry(&self) -> Option<&SceneGeometry> {
        self.geometry.as_ref()
    }

    /// The five ground-truth maps in (i_u, i_f, phi_f, i_r, phi_r) order.
    pub fn component_images(&self) -> Result<[FloatImage; 5]> {
        let mut imgs: Vec<FloatImage> = (0..5)
            .map(|_| FloatImage::new(self.width, self.height, 1))
            .collect::<Result<_>>()?;
        for (i, p) in self.params.iter().enumerate() {
            imgs[0].data_mut()[i] = p.i_u() as f32;
            imgs[1].data_mut()[i] = p.i_f() as f32;
            imgs[2].data_mut()[i] = p.phi_f() as f32;
            imgs[3].data_mut()[i] = p.i_r() as f32;
            imgs[4].data_mut()[i] = p.phi_r() as f32;
        }
        Ok(imgs.try_into().expect("five maps"))
    }
}

fn default_flat_i_u() -> f64 {
    1.0
}

/// A flat, purely diffuse target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatDiffuseRecipe {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_flat_i_u")]
    pub i_u: f64,
}

/// Spatially uniform component parameters; the work-horse for round-trip
/// checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformRecipe {
    pub width: usize,
    pub height: usize,
    pub i_u: f64,
    pub i_f: f64,
    #[serde(default)]
    pub phi_f_deg: f64,
    pub i_r: f64,
    #[serde(default)]
    pub phi_r_deg: f64,
}

fn default_proj_dim() -> usize {
    1024
}
fn default_focal() -> f64 {
    600.0
}
fn default_baseline() -> f64 {
    100.0
}
fn default_apex_depth() -> f64 {
    240.0
}
fn default_depth_slope() -> f64 {
    1.0
}
fn default_i_u_range() -> (f64, f64) {
    (0.02, 0.08)
}
fn default_i_f_range() -> (f64, f64) {
    (0.6, 1.0)
}
fn default_reverse_ratio_range() -> (f64, f64) {
    (0.8, 2.0)
}

/// Two specular planes meeting at a concave vertical edge on the optical
/// axis, opening toward the camera. The groove spans the whole image; the
/// mirror symmetry about the apex plane defines where second-bounce light
/// originates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VGrooveRecipe {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_proj_dim")]
    pub proj_width: usize,
    #[serde(default = "default_proj_dim")]
    pub proj_height: usize,
    #[serde(default = "default_focal")]
    pub focal_px: f64,
    #[serde(default = "default_baseline")]
    pub baseline_mm: f64,
    #[serde(default = "default_apex_depth")]
    pub apex_depth_mm: f64,
    /// dz/dX of the faces; 1.0 gives 45° faces (a 90° opening).
    #[serde(default = "default_depth_slope")]
    pub depth_slope: f64,
    #[serde(default = "default_i_u_range")]
    pub i_u_range: (f64, f64),
    #[serde(default = "default_i_f_range")]
    pub i_f_range: (f64, f64),
    /// Per-pixel `i_r / (i_u + i_f)` is drawn uniformly from this range.
    #[serde(default = "default_reverse_ratio_range")]
    pub reverse_ratio_range: (f64, f64),
    #[serde(default)]
    pub phi_f_deg: f64,
    #[serde(default)]
    pub phi_r_deg: f64,
    /// Third-bounce intensity as a fraction of i_f; 0 disables it.
    #[serde(default)]
    pub third_bounce: f64,
    /// Projector-column offset of the third-bounce source.
    #[serde(default)]
    pub third_bounce_shift_cols: i64,
}

impl VGrooveRecipe {
    pub fn with_size(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            proj_width: default_proj_dim(),
            proj_height: default_proj_dim(),
            focal_px: default_focal(),
            baseline_mm: default_baseline(),
            apex_depth_mm: default_apex_depth(),
            depth_slope: default_depth_slope(),
            i_u_range: default_i_u_range(),
            i_f_range: default_i_f_range(),
            reverse_ratio_range: default_reverse_ratio_range(),
            phi_f_deg: 0.0,
            phi_r_deg: 0.0,
            third_bounce: 0.0,
            third_bounce_shift_cols: 0,
        }
    }

    /// The rectified rig implied by the recipe.
    pub fn rig(&self) -> RigCalibration {
        RigCalibration {
            focal_px: self.focal_px,
            cx: (self.width as f64 - 1.0) / 2.0,
            cy: (self.height as f64 - 1.0) / 2.0,
            proj_cx: self.proj_width as f64 / 2.0,
            proj_cy: self.proj_height as f64 / 2.0,
            baseline_mm: self.baseline_mm,
        }
    }

    /// The groove faces `z = apex − slope·|X|` as planes in camera
    /// coordinates: left face `slope·X − z + apex = 0`, right face
    /// `slope·X + z − apex = 0`.
    pub fn planes(&self) -> Result<[Plane; 2]> {
        Ok([
            Plane::new([self.depth_slope, 0.0, -1.0], self.apex_depth_mm)?,
            Plane::new([self.depth_slope, 0.0, 1.0], -self.apex_depth_mm)?,
        ])
    }
}

fn default_checker_period() -> u32 {
    8
}
fn default_mixed_level() -> f64 {
    0.6
}

/// Bands of distinct transport behavior plus a mirror-like hexagon patch,
/// exercising every cell of the direct/global × component grid:
/// a sharp forward band, a hexagon whose reverse component reflects the
/// pattern coherently (high-frequency inter-reflection), a band whose
/// unpolarized term gathers light diffusely (low-frequency inter-reflection),
/// and a band with a blurred reverse term (low-frequency specular
/// inter-reflection).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedRecipe {
    pub width: usize,
    pub height: usize,
    /// Checker period the mirror's source offset stays coherent with.
    #[serde(default = "default_checker_period")]
    pub checker_period: u32,
    #[serde(default = "default_mixed_level")]
    pub i_f_level: f64,
    #[serde(default = "default_mixed_level")]
    pub i_r_mirror: f64,
    #[serde(default = "default_mixed_level")]
    pub i_u_interreflect: f64,
    #[serde(default = "default_mixed_level")]
    pub i_r_lowfreq: f64,
    /// Baseline diffuse level outside the inter-reflection band.
    #[serde(default = "default_mixed_level")]
    pub i_u_base: f64,
}

impl MixedRecipe {
    pub fn with_size(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            checker_period: default_checker_period(),
            i_f_level: default_mixed_level(),
            i_r_mirror: default_mixed_level(),
            i_u_interreflect: default_mixed_level(),
            i_r_lowfreq: default_mixed_level(),
            i_u_base: default_mixed_level(),
        }
    }
}

/// The scene vocabulary understood by `generate_scene`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case")]
pub enum SceneRecipe {
    FlatDiffuse(FlatDiffuseRecipe),
    Uniform(UniformRecipe),
    VGroove(VGrooveRecipe),
    Mixed(MixedRecipe),
}

impl SceneRecipe {
    /// Builds a recipe with default parameters from its CLI name.
    pub fn named(name: &str, width: usize, height: usize) -> Result<Self> {
        match name {
            "flat-diffuse" => Ok(SceneRecipe::FlatDiffuse(FlatDiffuseRecipe {
                width,
                height,
                i_u: default_flat_i_u(),
            })),
            "uniform" => Ok(SceneRecipe::Uniform(UniformRecipe {
                width,
                height,
                i_u: 0.4,
                i_f: 0.6,
                phi_f_deg: crate::angle::rad_to_deg(0.1),
                i_r: 0.2,
                phi_r_deg: crate::angle::rad_to_deg(1.0),
            })),
            "v-groove" => Ok(SceneRecipe::VGroove(VGrooveRecipe::with_size(width, height))),
            "mixed" => Ok(SceneRecipe::Mixed(MixedRecipe::with_size(width, height))),
            other => Err(Error::UnknownRecipe(other.to_string())),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            SceneRecipe::FlatDiffuse(r) => r.width,
            SceneRecipe::Uniform(r) => r.width,
            SceneRecipe::VGroove(r) => r.width,
            SceneRecipe::Mixed(r) => r.width,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            SceneRecipe::FlatDiffuse(r) => r.height,
            SceneRecipe::Uniform(r) => r.height,
            SceneRecipe::VGroove(r) => r.height,
            SceneRecipe::Mixed(r) => r.height,
        }
    }
}

/// Generates the per-pixel ground truth of a recipe; deterministic per seed.
pub fn generate_scene(recipe: &SceneRecipe, seed: u64) -> Result<GroundTruthScene> {
    if recipe.width() == 0 || recipe.height() == 0 {
        return Err(Error::InvalidParameter(
            "scene dimensions must be positive".to_string(),
        ));
    }
    match recipe {
        SceneRecipe::FlatDiffuse(r) => flat_diffuse(r),
        SceneRecipe::Uniform(r) => uniform(r),
        SceneRecipe::VGroove(r) => v_groove(r, seed),
        SceneRecipe::Mixed(r) => mixed(r),
    }
}

fn identity_maps(width: usize, height: usize) -> Vec<(u32, u32)> {
    let mut m = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            m.push((x as u32, y as u32));
        }
    }
    m
}

fn flat_diffuse(r: &FlatDiffuseRecipe) -> Result<GroundTruthScene> {
    let n = r.width * r.height;
    let p = ComponentParams::new(r.i_u, 0.0, 0.0, 0.0, 0.0)?;
    GroundTruthScene::new(
        r.width,
        r.height,
        r.width,
        r.height,
        vec![p; n],
        identity_maps(r.width, r.height),
        vec![None; n],
        vec![PatternResponse::Point; n],
        vec![PatternResponse::Point; n],
        None,
        None,
    )
}

fn uniform(r: &UniformRecipe) -> Result<GroundTruthScene> {
    let n = r.width * r.height;
    let p = ComponentParams::new(
        r.i_u,
        r.i_f,
        r.phi_f_deg.to_radians(),
        r.i_r,
        r.phi_r_deg.to_radians(),
    )?;
    // Reverse light arrives from the horizontally mirrored projector pixel.
    let source = if r.i_r > 0.0 {
        let mut m = Vec::with_capacity(n);
        for y in 0..r.height {
            for x in 0..r.width {
                m.push(Some(((r.width - 1 - x) as u32, y as u32)));
            }
        }
        m
    } else {
        vec![None; n]
    };
    GroundTruthScene::new(
        r.width,
        r.height,
        r.width,
        r.height,
        vec![p; n],
        identity_maps(r.width, r.height),
        source,
        vec![PatternResponse::Point; n],
        vec![PatternResponse::Point; n],
        None,
        None,
    )
}

fn v_groove(r: &VGrooveRecipe, seed: u64) -> Result<GroundTruthScene> {
    if !(r.focal_px > 0.0)
        || !(r.baseline_mm > 0.0)
        || !(r.apex_depth_mm > 0.0)
        || !(r.depth_slope > 0.0)
    {
        return Err(Error::InvalidParameter(
            "v-groove geometry parameters must be positive".to_string(),
        ));
    }
    let rig = r.rig();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i_u: f64 = rng.random_range(r.i_u_range.0..=r.i_u_range.1);
    let i_f: f64 = rng.random_range(r.i_f_range.0..=r.i_f_range.1);
    let phi_f = r.phi_f_deg.to_radians();
    let phi_r = r.phi_r_deg.to_radians();

    let n = r.width * r.height;
    let mut params = Vec::with_capacity(n);
    let mut direct = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    let mut third_int = Vec::new();
    let mut third_src = Vec::new();

    let project = |gx: f64, gy: f64, z: f64| -> Result<(u32, u32)> {
        let px = rig.proj_cx + rig.focal_px * (gx - rig.baseline_mm) / z;
        let py = rig.proj_cy + rig.focal_px * gy / z;
        let (pxr, pyr) = (px.round(), py.round());
        if pxr < 0.0
            || pyr < 0.0
            || pxr >= r.proj_width as f64
            || pyr >= r.proj_height as f64
        {
            return Err(Error::InvalidParameter(format!(
                "surface point projects to ({pxr}, {pyr}), outside the {}x{} projector; \
                 enlarge the projector or shrink the scene",
                r.proj_width, r.proj_height
            )));
        }
        Ok((pxr as u32, pyr as u32))
    };

    for y in 0..r.height {
        let v = (y as f64 - rig.cy) / rig.focal_px;
        for x in 0..r.width {
            let u = (x as f64 - rig.cx) / rig.focal_px;
            // Ray-face intersection: z = apex / (1 + slope·|u|).
            let z = r.apex_depth_mm / (1.0 + r.depth_slope * u.abs());
            let gx = u * z;
            let gy = v * z;
            depth.push(z);
            direct.push(project(gx, gy, z)?);
            // Second-bounce light originates at the mirror image of the
            // surface point across the apex plane X = 0 (same depth by
            // groove symmetry).
            source.push(Some(project(-gx, gy, z)?));

            let ratio = rng.random_range(r.reverse_ratio_range.0..=r.reverse_ratio_range.1);
            let i_r = ratio * (i_u + i_f);
            params.push(ComponentParams::new(i_u, i_f, phi_f, i_r, phi_r)?);

            if r.third_bounce > 0.0 {
                third_int.push(r.third_bounce * i_f);
                let (dx, dy) = *direct.last().unwrap();
                let col = (dx as i64 + r.third_bounce_shift_cols)
                    .clamp(0, r.proj_width as i64 - 1) as u32;
                third_src.push((col, dy));
            }
        }
    }

    let third = if r.third_bounce > 0.0 {
        Some(ThirdBounce {
            phase: vec![phi_f; third_int.len()],
            intensity: third_int,
            source: third_src,
        })
    } else {
        None
    };

    let geometry = Some(SceneGeometry {
        rig,
        planes: r.planes()?,
        depth_mm: depth,
    });

    GroundTruthScene::new(
        r.width,
        r.height,
        r.proj_width,
        r.proj_height,
        params,
        direct,
        source,
        vec![PatternResponse::Point; n],
        vec![PatternResponse::Point; n],
        third,
        geometry,
    )
}

/// Point-in-regular-hexagon test (flat-top orientation, circumradius `r`).
fn in_hexagon(dx: f64, dy: f64, r: f64) -> bool {
    let h = r * 3f64.sqrt() / 2.0;
    let n1 = dy.abs();
    let n2 = (dx * 3f64.sqrt() / 2.0 + dy / 2.0).abs();
    let n3 = (dx * 3f64.sqrt() / 2.0 - dy / 2.0).abs();
    n1 <= h && n2 <= h && n3 <= h
}

fn mixed(r: &MixedRecipe) -> Result<GroundTruthScene> {
    if r.checker_period == 0 {
        return Err(Error::InvalidParameter(
            "checker period must be positive".to_string(),
        ));
    }
    let (w, h) = (r.width, r.height);
    let n = w * h;
    let mut params = Vec::with_capacity(n);
    let direct = identity_maps(w, h);
    let mut source: Vec<Option<(u32, u32)>> = vec![None; n];
    let mut unpol_resp = vec![PatternResponse::Point; n];
    let mut rev_resp = vec![PatternResponse::Point; n];

    let band = w / 4;
    let hex_cx = band as f64 + band as f64 / 2.0;
    let hex_cy = h as f64 / 2.0;
    let hex_r = (band.min(h) as f64) * 0.45;
    let mirror_shift = 2 * r.checker_period; // even multiple of the period keeps checker parity
    let mean = PatternResponse::Mean {
        radius: r.checker_period,
    };

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let in_hex = x >= band
                && x < 2 * band
                && in_hexagon(x as f64 - hex_cx, y as f64 - hex_cy, hex_r);
            let (i_u, i_f, i_r) = if in_hex {
                // High-frequency specular inter-reflection: the mirror
                // reflects the pattern coherently from a shifted column.
                source[i] = Some((
                    ((x as u32 + mirror_shift) % w as u32),
                    y as u32,
                ));
                (0.05 * r.i_u_base, r.i_f_level, r.i_r_mirror)
            } else if x >= 2 * band && x < 3 * band {
                // Diffuse-mediated inter-reflection feeds the unpolarized
                // term from a wide footprint.
                unpol_resp[i] = mean;
                (r.i_u_interreflect, r.i_f_level, 0.0)
            } else if x >= 3 * band {
                // Rough-mirror inter-reflection: reverse-rotating but
                // spatially blurred.
                source[i] = Some((x as u32, y as u32));
                rev_resp[i] = mean;
                (r.i_u_base, r.i_f_level, r.i_r_lowfreq)
            } else {
                // Plain direct band.
                (r.i_u_base, r.i_f_level, 0.0)
            };
            params.push(ComponentParams::new(i_u, i_f, 0.0, i_r, 0.0)?);
        }
    }

    GroundTruthScene::new(
        w, h, w, h, params, direct, source, unpol_resp, rev_resp, None, None,
    )
}
