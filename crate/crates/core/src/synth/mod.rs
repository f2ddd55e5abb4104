//! Synthetic ridge images with planted latent/reference ground truth, plus
//! exhaustive oracles for the graph matcher.

mod oracle;

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angle_delta;
use crate::descriptor::{self, normalize_row};
use crate::error::{Error, Result};
use crate::image::{GrayImage, DEFAULT_PPI};
use crate::template::{self, quantize_angle, ExtractionConfig, TemplateKind, TextureTemplate, Variant, VirtualMinutia};

pub use oracle::{brute_force_match, planted_clique_instance, random_instance, Instance, MAX_ORACLE_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationModel {
    /// Straight parallel ridges at `constant_angle`.
    Constant,
    /// Straight ridges bent by a few long-wavelength phase warps.
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub ridge_period: f64,
    pub orientation: OrientationModel,
    /// Ridge direction for the constant model, radians.
    pub constant_angle: f64,
    /// Peak phase slope contributed by each warp term.
    pub warp_strength: f64,
    /// Gaussian contrast bumps per 10^4 px; they make local texture distinctive.
    pub blob_density: f64,
    pub crop_fraction: f64,
    /// Latent position jitter sigma, pixels.
    pub position_jitter: f64,
    /// Latent orientation jitter sigma, radians.
    pub orientation_jitter: f64,
    /// Per-component Gaussian noise added to latent descriptors before renormalizing.
    pub descriptor_noise: f64,
    /// Latent rotation is uniform in `[-rotation_range, rotation_range]`...
    pub rotation_range: f64,
    /// ...unless fixed here.
    pub rotation: Option<f64>,
    pub extraction: ExtractionConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            width: 384,
            height: 384,
            ridge_period: 9.0,
            orientation: OrientationModel::Smooth,
            constant_angle: 0.0,
            warp_strength: 0.15,
            blob_density: 12.0,
            crop_fraction: 0.4,
            position_jitter: 2.0,
            orientation_jitter: 5f64.to_radians(),
            descriptor_noise: 0.05,
            rotation_range: PI,
            rotation: None,
            extraction: ExtractionConfig::default(),
        }
    }
}

impl SynthConfig {
    /// Same geometry with every noise source switched off.
    pub fn noiseless(&self) -> Self {
        Self { position_jitter: 0.0, orientation_jitter: 0.0, descriptor_noise: 0.0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.width < 16 || self.height < 16 || self.width > u16::MAX as usize || self.height > u16::MAX as usize {
            return bad(format!("image size {}x{} out of range", self.width, self.height));
        }
        if !(self.ridge_period >= 2.0) {
            return bad(format!("ridge period {} below 2 px", self.ridge_period));
        }
        for (name, v) in [
            ("position_jitter", self.position_jitter),
            ("orientation_jitter", self.orientation_jitter),
            ("descriptor_noise", self.descriptor_noise),
            ("rotation_range", self.rotation_range),
            ("warp_strength", self.warp_strength),
            ("blob_density", self.blob_density),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if self.rotation.is_some_and(|r| !r.is_finite()) {
            return bad("rotation must be finite".into());
        }
        if !(self.crop_fraction > 0.0 && self.crop_fraction <= 1.0) {
            return bad(format!("crop fraction {} outside (0, 1]", self.crop_fraction));
        }
        self.extraction.validate()
    }
}

/// Independent stream per `(seed, index, purpose)`.
fn rng_for(seed: u64, index: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

const REFERENCE_STREAM: u64 = 1;
const LATENT_STREAM: u64 = 2;

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

/// Renders subject `index`: a phase-coherent sinusoid whose phase is a plane
/// wave plus smooth warps, with contrast modulated by random Gaussian bumps.
pub fn render_reference_image(cfg: &SynthConfig, index: u64) -> Result<GrayImage> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, index, REFERENCE_STREAM);
    let (w, h) = (cfg.width, cfg.height);
    let base = match cfg.orientation {
        OrientationModel::Constant => cfg.constant_angle,
        OrientationModel::Smooth => rng.random_range(0.0..PI),
    };
    // phase gradient is the ridge normal
    let normal = (-(base.sin()), base.cos());
    let phase0 = rng.random_range(0.0..TAU);
    let warps: Vec<(f64, f64, f64, f64)> = match cfg.orientation {
        OrientationModel::Constant => Vec::new(),
        OrientationModel::Smooth => (0..4)
            .map(|_| {
                let wavelength = rng.random_range(160.0..420.0);
                let dir: f64 = rng.random_range(0.0..TAU);
                let k = TAU / wavelength;
                let amp = cfg.warp_strength * rng.random_range(0.5..1.0) / k;
                (k * dir.cos(), k * dir.sin(), amp, rng.random_range(0.0..TAU))
            })
            .collect(),
    };

    let mut contrast = vec![0.55f64; w * h];
    let blobs = (cfg.blob_density * (w * h) as f64 / 1e4).round() as usize;
    for _ in 0..blobs {
        let (cx, cy) = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        let sigma: f64 = rng.random_range(6.0..14.0);
        let amp = rng.random_range(-0.6..0.6);
        let r = (3.0 * sigma).ceil() as isize;
        let (x0, x1) = ((cx as isize - r).max(0), (cx as isize + r).min(w as isize - 1));
        let (y0, y1) = ((cy as isize - r).max(0), (cy as isize + r).min(h as isize - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                contrast[y as usize * w + x as usize] += amp * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }

    let freq = TAU / cfg.ridge_period;
    GrayImage::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let warp: f64 = warps.iter().map(|&(kx, ky, a, ph)| a * (kx * xf + ky * yf + ph).sin()).sum();
        let phase = normal.0 * xf + normal.1 * yf + warp;
        let c = contrast[y * w + x].clamp(0.2, 1.0);
        (128.0 + 120.0 * c * (freq * phase + phase0).cos()).round().clamp(0.0, 255.0) as u8
    })
    .map(|img| img.with_ppi(DEFAULT_PPI))
}

/// Reference image plus its template, extracted through the regular pipeline.
pub fn generate_reference(cfg: &SynthConfig, index: u64) -> Result<(GrayImage, TextureTemplate)> {
    let img = render_reference_image(cfg, index)?;
    let ext = ExtractionConfig { dual: false, ..cfg.extraction };
    let t = template::extract(&img, &ext, Variant::Raw, None)?;
    Ok((img, t))
}

/// A latent derived from a reference with its planted correspondences.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPair {
    pub reference: TextureTemplate,
    pub latent: TextureTemplate,
    /// `(latent index, reference index)`: the correctly oriented dual of each
    /// latent point and the reference minutia it came from. Injective.
    pub truth: Vec<(usize, usize)>,
    /// Reference -> latent motion: `q = R(rotation) (p - center) + translation`.
    pub rotation: f64,
    pub center: (f64, f64),
    pub translation: (f64, f64),
}

impl PlantedPair {
    pub fn is_empty(&self) -> bool {
        self.latent.is_empty()
    }

    /// Latent frame -> reference frame.
    pub fn to_reference(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        let (dx, dy) = (x - self.translation.0, y - self.translation.1);
        (c * dx + s * dy + self.center.0, -s * dx + c * dy + self.center.1)
    }

    /// Fraction of planted correspondences present in `found`.
    pub fn recall(&self, found: &[(usize, usize)]) -> f64 {
        if self.truth.is_empty() {
            return 0.0;
        }
        let hit = self.truth.iter().filter(|t| found.contains(t)).count();
        hit as f64 / self.truth.len() as f64
    }
}

/// Crops the `round(crop_fraction * n)` reference minutiae nearest a random
/// reference point, moves them rigidly, jitters each, and samples latent
/// descriptors from the reference image at the jittered pose. Both duals of a
/// point get their own descriptor; descriptor noise is added to each.
pub fn derive_latent(ref_image: &GrayImage, reference: &TextureTemplate, cfg: &SynthConfig, index: u64) -> Result<PlantedPair> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, index, LATENT_STREAM);
    let n = reference.len();
    let empty = |rotation| PlantedPair {
        reference: reference.clone(),
        latent: TextureTemplate::empty(TemplateKind::Latent, reference.variant, reference.stride, reference.descriptor_len),
        truth: Vec::new(),
        rotation,
        center: (0.0, 0.0),
        translation: (0.0, 0.0),
    };
    let k = (cfg.crop_fraction * n as f64).round() as usize;
    if n == 0 || k == 0 {
        return Ok(empty(0.0));
    }
    let anchor = reference.minutiae[rng.random_range(0..n)];
    let mut order: Vec<usize> = (0..n).collect();
    let d2 = |i: usize| (reference.minutiae[i].x - anchor.x).powi(2) + (reference.minutiae[i].y - anchor.y).powi(2);
    order.sort_by(|&a, &b| d2(a).total_cmp(&d2(b)).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();

    let drawn = if cfg.rotation_range > 0.0 { rng.random_range(-cfg.rotation_range..=cfg.rotation_range) } else { 0.0 };
    let rotation = cfg.rotation.unwrap_or(drawn);
    let center = (anchor.x, anchor.y);
    let (s, c) = rotation.sin_cos();
    let moved: Vec<(f64, f64)> = chosen
        .iter()
        .map(|&i| {
            let m = &reference.minutiae[i];
            let (dx, dy) = (m.x - center.0, m.y - center.1);
            (c * dx - s * dy, s * dx + c * dy)
        })
        .collect();
    // keep latent coordinates comfortably positive
    let margin = cfg.extraction.border_margin as f64;
    let min_x = moved.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_y = moved.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let translation = (
        (margin - min_x + rng.random_range(0.0..32.0)).round(),
        (margin - min_y + rng.random_range(0.0..32.0)).round(),
    );

    let mut pair = empty(rotation);
    pair.center = center;
    pair.translation = translation;
    let patch_len = reference.descriptor_len / 3;
    let seed = cfg.extraction.projection_seed;
    let mut minutiae = Vec::with_capacity(2 * k);
    let mut descriptors = Vec::with_capacity(2 * k * reference.descriptor_len);
    let mut truth = Vec::with_capacity(k);
    for (g, (&ri, &(mx, my))) in chosen.iter().zip(&moved).enumerate() {
        let x = (mx + translation.0 + gaussian(&mut rng, cfg.position_jitter)).round().clamp(0.0, u16::MAX as f64);
        let y = (my + translation.1 + gaussian(&mut rng, cfg.position_jitter)).round().clamp(0.0, u16::MAX as f64);
        let true_theta = reference.minutiae[ri].theta + rotation;
        let observed = true_theta + gaussian(&mut rng, cfg.orientation_jitter);
        let first = quantize_angle(observed.rem_euclid(PI));
        let duals = [first, quantize_angle(first + PI)];
        let correct = if angle_delta(duals[0], true_theta) <= angle_delta(duals[1], true_theta) { 0 } else { 1 };
        truth.push((2 * g + correct, ri));
        let (rx, ry) = pair.to_reference(x, y);
        for theta in duals {
            minutiae.push(VirtualMinutia { x, y, theta, dual_group: g as u32 });
            let pose = VirtualMinutia { x: rx, y: ry, theta: theta - rotation, dual_group: 0 };
            let mut d = descriptor::minutia_descriptor(ref_image, &pose, patch_len, seed)?.values;
            if cfg.descriptor_noise > 0.0 && d.iter().any(|&v| v != 0.0) {
                for v in d.iter_mut() {
                    *v += gaussian(&mut rng, cfg.descriptor_noise) as f32;
                }
                normalize_row(&mut d);
            }
            descriptors.extend(d);
        }
    }
    pair.latent = TextureTemplate {
        kind: TemplateKind::Latent,
        variant: reference.variant,
        stride: reference.stride,
        minutiae,
        descriptors,
        descriptor_len: reference.descriptor_len,
    };
    pair.truth = truth;
    Ok(pair)
}

/// Latent image matching a planted pair: the reference texture resampled into
/// the latent frame inside the cropped support, mid-gray elsewhere.
pub fn render_latent_image(ref_image: &GrayImage, pair: &PlantedPair) -> Result<GrayImage> {
    let pts = &pair.latent.minutiae;
    let reach = 40.0;
    let w = pts.iter().map(|m| m.x).fold(0.0, f64::max) + 64.0;
    let h = pts.iter().map(|m| m.y).fold(0.0, f64::max) + 64.0;
    let (w, h) = ((w as usize).max(16), (h as usize).max(16));
    GrayImage::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let near = pts.iter().any(|m| (m.x - xf).abs() <= reach && (m.y - yf).abs() <= reach);
        if !near {
            return 128;
        }
        let (rx, ry) = pair.to_reference(xf, yf);
        descriptor::sample_bilinear(ref_image, rx, ry).round().clamp(0.0, 255.0) as u8
    })
}

/// Ground truth as `latent_idx,ref_idx` rows.
pub fn write_truth_csv(truth: &[(usize, usize)], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "latent_idx,ref_idx")?;
    for (l, r) in truth {
        writeln!(out, "{l},{r}")?;
    }
    Ok(())
}

/// Descriptor cosine similarities of planted pairs (genuine) and of each
/// latent minutia against every non-mated reference minutia (impostor).
pub fn planted_descriptor_scores(pair: &PlantedPair) -> (Vec<f64>, Vec<f64>) {
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum::<f64>();
    let genuine = pair.truth.iter().map(|&(l, r)| dot(pair.latent.descriptor(l), pair.reference.descriptor(r))).collect();
    let mut impostor = Vec::new();
    for &(l, mate) in &pair.truth {
        for r in (0..pair.reference.len()).filter(|&r| r != mate) {
            impostor.push(dot(pair.latent.descriptor(l), pair.reference.descriptor(r)));
        }
    }
    (genuine, impostor)
}
