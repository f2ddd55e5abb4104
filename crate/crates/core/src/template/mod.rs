//! Texture templates: virtual minutiae on the ROI raster plus one descriptor each.

mod format;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{self, DEFAULT_PROJECTION_SEED, DESCRIPTOR_LENGTHS};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::ridgeflow::{self, OrientationField, RoiMask};

pub use format::{deserialize, serialize, HEADER_LEN, MAGIC, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateKind {
    Latent,
    Reference,
}

/// Which preprocessed image the descriptors were taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Raw,
    E1,
    E2,
    T,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Raw, Variant::E1, Variant::E2, Variant::T];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::E1 => "e1",
            Variant::E2 => "e2",
            Variant::T => "t",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown variant {s:?} (raw, e1, e2, t)")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A sampled `(x, y, theta)` point. `dual_group` is shared by the two opposite
/// orientations created at one latent grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualMinutia {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub dual_group: u32,
}

impl VirtualMinutia {
    /// Rounds to what the template file can hold: integer pixels and a
    /// single-precision angle in `[0, 2pi)`.
    pub fn quantized(self) -> Self {
        Self {
            x: self.x.round().clamp(0.0, u16::MAX as f64),
            y: self.y.round().clamp(0.0, u16::MAX as f64),
            theta: quantize_angle(self.theta),
            ..self
        }
    }
}

/// Wraps into `[0, 2pi)` and rounds to the nearest `f32`, staying below `2pi`.
pub fn quantize_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    let mut q = wrapped as f32;
    while q as f64 >= TAU {
        q = f32::from_bits(q.to_bits() - 1);
    }
    q as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub stride: u16,
    pub border_margin: u32,
    /// Emit `theta` and `theta + pi` per grid point (latents).
    pub dual: bool,
    /// Per-patch descriptor length `l`; descriptors are `3 * l` long.
    pub patch_len: usize,
    pub projection_seed: u64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { stride: 32, border_margin: 48, dual: false, patch_len: 64, projection_seed: DEFAULT_PROJECTION_SEED }
    }
}

impl ExtractionConfig {
    pub fn latent() -> Self {
        Self { dual: true, ..Self::default() }
    }

    pub fn reference() -> Self {
        Self::default()
    }

    pub fn kind(&self) -> TemplateKind {
        if self.dual {
            TemplateKind::Latent
        } else {
            TemplateKind::Reference
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride < 16 {
            return Err(Error::InvalidParams(format!("stride {} below 16", self.stride)));
        }
        descriptor::check_patch_len(self.patch_len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureTemplate {
    pub kind: TemplateKind,
    pub variant: Variant,
    pub stride: u16,
    pub minutiae: Vec<VirtualMinutia>,
    /// Row-major, `minutiae.len()` rows of `descriptor_len` values.
    pub descriptors: Vec<f32>,
    pub descriptor_len: usize,
}

impl TextureTemplate {
    pub fn empty(kind: TemplateKind, variant: Variant, stride: u16, descriptor_len: usize) -> Self {
        Self { kind, variant, stride, minutiae: Vec::new(), descriptors: Vec::new(), descriptor_len }
    }

    pub fn len(&self) -> usize {
        self.minutiae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutiae.is_empty()
    }

    #[inline]
    pub fn descriptor(&self, i: usize) -> &[f32] {
        &self.descriptors[i * self.descriptor_len..(i + 1) * self.descriptor_len]
    }

    pub fn is_low_quality(&self, i: usize) -> bool {
        self.descriptor(i).iter().all(|&v| v == 0.0)
    }

    /// Dual group of every minutia, in order.
    pub fn groups(&self) -> Vec<u32> {
        self.minutiae.iter().map(|m| m.dual_group).collect()
    }

    /// Structural invariants shared by every template this crate produces.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !DESCRIPTOR_LENGTHS.contains(&self.descriptor_len) {
            return Err(format!("descriptor length {} not in {{96, 192, 384}}", self.descriptor_len));
        }
        if self.descriptors.len() != self.minutiae.len() * self.descriptor_len {
            return Err(format!(
                "{} descriptor values for {} minutiae of length {}",
                self.descriptors.len(),
                self.minutiae.len(),
                self.descriptor_len
            ));
        }
        if let Some(m) = self.minutiae.iter().find(|m| !(m.theta >= 0.0 && m.theta < TAU)) {
            return Err(format!("theta {} outside [0, 2pi)", m.theta));
        }
        if self.kind == TemplateKind::Latent {
            if self.minutiae.len() % 2 != 0 {
                return Err("latent template with odd minutiae count".into());
            }
            for pair in self.minutiae.chunks_exact(2) {
                if pair[0].dual_group != pair[1].dual_group || pair[0].x != pair[1].x || pair[0].y != pair[1].y {
                    return Err("latent minutiae are not stored as consecutive dual pairs".into());
                }
            }
        }
        Ok(())
    }
}

/// Raster-scans the ROI at multiples of the stride, starting at `(s, s)`, and
/// keeps points whose whole `border_margin` neighborhood is foreground.
pub fn place_virtual_minutiae(roi: &RoiMask, field: &OrientationField, cfg: &ExtractionConfig) -> Result<Vec<VirtualMinutia>> {
    if roi.cols != field.cols || roi.rows != field.rows {
        return Err(Error::GridMismatch(format!(
            "roi grid {}x{} vs field grid {}x{}",
            roi.cols, roi.rows, field.cols, field.rows
        )));
    }
    cfg.validate()?;
    let (w, h) = (field.image_width, field.image_height);
    let s = cfg.stride as usize;
    let b = cfg.border_margin as usize;
    let bs = field.block_size;
    let mut out = Vec::new();
    let mut group = 0u32;
    for y in (s..h).step_by(s) {
        for x in (s..w).step_by(s) {
            if x < b || y < b || x + b >= w || y + b >= h {
                continue;
            }
            let inside = ((y - b) / bs..=(y + b) / bs)
                .all(|r| ((x - b) / bs..=(x + b) / bs).all(|c| roi.is_foreground(r, c)));
            if !inside {
                continue;
            }
            let theta = ridgeflow::orientation_at(field, x as f64, y as f64)?;
            let base = VirtualMinutia { x: x as f64, y: y as f64, theta: quantize_angle(theta), dual_group: group };
            out.push(base);
            if cfg.dual {
                out.push(VirtualMinutia { theta: quantize_angle(theta + PI), ..base });
            }
            group += 1;
        }
    }
    Ok(out)
}

/// Places minutiae and binds one unit-norm descriptor to each.
pub fn build_template(
    img: &GrayImage,
    roi: &RoiMask,
    field: &OrientationField,
    cfg: &ExtractionConfig,
    variant: Variant,
) -> Result<TextureTemplate> {
    let minutiae = place_virtual_minutiae(roi, field, cfg)?;
    bind_descriptors(img, minutiae, cfg, variant)
}

/// Computes descriptors for already placed minutiae.
pub fn bind_descriptors(
    img: &GrayImage,
    minutiae: Vec<VirtualMinutia>,
    cfg: &ExtractionConfig,
    variant: Variant,
) -> Result<TextureTemplate> {
    cfg.validate()?;
    let rows = minutiae
        .par_iter()
        .map(|m| descriptor::minutia_descriptor(img, m, cfg.patch_len, cfg.projection_seed))
        .collect::<Result<Vec<_>>>()?;
    let descriptor_len = 3 * cfg.patch_len;
    let mut descriptors = Vec::with_capacity(rows.len() * descriptor_len);
    for d in rows {
        descriptors.extend(d.values);
    }
    Ok(TextureTemplate { kind: cfg.kind(), variant, stride: cfg.stride, minutiae, descriptors, descriptor_len })
}

/// Full pipeline on one image: ridge flow, ROI (or the supplied mask), placement, descriptors.
pub fn extract(img: &GrayImage, cfg: &ExtractionConfig, variant: Variant, mask: Option<&RoiMask>) -> Result<TextureTemplate> {
    let field = ridgeflow::estimate_orientation_field(img)?;
    let roi = match mask {
        Some(m) => m.clone(),
        None => ridgeflow::segment_roi_default(img, &field)?,
    };
    build_template(img, &roi, &field, cfg, variant)
}
