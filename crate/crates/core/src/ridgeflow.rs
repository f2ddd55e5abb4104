//! Block-wise ridge orientation and foreground segmentation.
//!
//! Orientation uses averaged squared gradients: per 16x16 block the doubled-angle
//! vector `(sum(gx^2 - gy^2), sum(2 gx gy))` is accumulated, smoothed once with a
//! 3x3 Gaussian over the block grid, and halved back into a gradient direction.
//! Ridges run perpendicular to the gradient, so the reported angle is that
//! direction rotated by pi/2 and folded into `[0, pi)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const BLOCK_SIZE: usize = 16;

/// Partial edge blocks covering less than this fraction of a full block are background.
const MIN_BLOCK_COVERAGE: f64 = 0.25;

/// Fraction of the strongest block-mean gradient used as the default ROI threshold.
pub const DEFAULT_MAG_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub block_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub image_width: usize,
    pub image_height: usize,
    /// Ridge direction per block, radians in `[0, pi)`, row-major.
    pub angles: Vec<f64>,
    /// Normalized magnitude of the smoothed squared-gradient vector, in `[0, 1]`.
    pub coherence: Vec<f64>,
}

impl OrientationField {
    #[inline]
    pub fn angle(&self, row: usize, col: usize) -> f64 {
        self.angles[row * self.cols + col]
    }

    #[inline]
    pub fn coherence_at(&self, row: usize, col: usize) -> f64 {
        self.coherence[row * self.cols + col]
    }

    /// Center of block `(row, col)` in continuous pixel coordinates.
    pub fn block_center(&self, row: usize, col: usize) -> (f64, f64) {
        let half = self.block_size as f64 / 2.0;
        (col as f64 * self.block_size as f64 + half, row as f64 * self.block_size as f64 + half)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    pub cols: usize,
    pub rows: usize,
    pub flags: Vec<bool>,
}

impl RoiMask {
    pub fn filled(cols: usize, rows: usize, value: bool) -> Self {
        Self { cols, rows, flags: vec![value; cols * rows] }
    }

    #[inline]
    pub fn is_foreground(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.flags[row * self.cols + col] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Builds a block mask from a pixel mask image: a block is foreground when
    /// most of its pixels are non-zero.
    pub fn from_mask_image(mask: &GrayImage) -> Self {
        let (cols, rows) = grid_dims(mask.width(), mask.height());
        let mut roi = Self::filled(cols, rows, false);
        for r in 0..rows {
            for c in 0..cols {
                let (x0, y0, x1, y1) = block_bounds(c, r, mask.width(), mask.height());
                let on = (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).filter(|&(x, y)| mask.get(x, y) > 0).count();
                roi.set(r, c, 2 * on > (x1 - x0) * (y1 - y0));
            }
        }
        roi
    }
}

pub fn grid_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(BLOCK_SIZE), height.div_ceil(BLOCK_SIZE))
}

fn block_bounds(col: usize, row: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
    let x0 = col * BLOCK_SIZE;
    let y0 = row * BLOCK_SIZE;
    (x0, y0, (x0 + BLOCK_SIZE).min(width), (y0 + BLOCK_SIZE).min(height))
}

/// Central-difference gradients with replicated borders.
fn gradients(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let i = y * w + x;
            gx[i] = (px[y * w + xp] as f64 - px[y * w + xm] as f64) / 2.0;
            gy[i] = (px[yp * w + x] as f64 - px[ym * w + x] as f64) / 2.0;
        }
    }
    (gx, gy)
}

struct BlockSums {
    gxx: Vec<f64>,
    gxy: Vec<f64>,
    energy: Vec<f64>,
    mean_mag: Vec<f64>,
    coverage: Vec<f64>,
}

fn block_sums(img: &GrayImage) -> BlockSums {
    let (w, h) = (img.width(), img.height());
    let (cols, rows) = grid_dims(w, h);
    let (gx, gy) = gradients(img);
    let n = cols * rows;
    let mut sums = BlockSums {
        gxx: vec![0.0; n],
        gxy: vec![0.0; n],
        energy: vec![0.0; n],
        mean_mag: vec![0.0; n],
        coverage: vec![0.0; n],
    };
    for r in 0..rows {
        for c in 0..cols {
            let (x0, y0, x1, y1) = block_bounds(c, r, w, h);
            let (mut sxx, mut sxy, mut se, mut sm) = (0.0, 0.0, 0.0, 0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let (a, b) = (gx[y * w + x], gy[y * w + x]);
                    sxx += a * a - b * b;
                    sxy += 2.0 * a * b;
                    se += a * a + b * b;
                    sm += (a * a + b * b).sqrt();
                }
            }
            let count = ((x1 - x0) * (y1 - y0)) as f64;
            let i = r * cols + c;
            sums.gxx[i] = sxx;
            sums.gxy[i] = sxy;
            sums.energy[i] = se;
            sums.mean_mag[i] = sm / count;
            sums.coverage[i] = count / (BLOCK_SIZE * BLOCK_SIZE) as f64;
        }
    }
    sums
}

/// 3x3 Gaussian over the block grid, renormalized where the kernel leaves the grid.
fn smooth_blocks(values: &[f64], cols: usize, rows: usize) -> Vec<f64> {
    const K: [f64; 3] = [1.0, 2.0, 1.0];
    let mut out = vec![0.0; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (dr, kr) in K.iter().enumerate() {
                let rr = r as isize + dr as isize - 1;
                if rr < 0 || rr >= rows as isize {
                    continue;
                }
                for (dc, kc) in K.iter().enumerate() {
                    let cc = c as isize + dc as isize - 1;
                    if cc < 0 || cc >= cols as isize {
                        continue;
                    }
                    let wgt = kr * kc;
                    acc += wgt * values[rr as usize * cols + cc as usize];
                    wsum += wgt;
                }
            }
            out[r * cols + c] = acc / wsum;
        }
    }
    out
}

fn fold_pi(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

pub fn estimate_orientation_field(img: &GrayImage) -> Result<OrientationField> {
    let (w, h) = (img.width(), img.height());
    if w < BLOCK_SIZE || h < BLOCK_SIZE {
        return Err(Error::ImageTooSmall { width: w, height: h, block: BLOCK_SIZE });
    }
    let (cols, rows) = grid_dims(w, h);
    let sums = block_sums(img);
    let sxx = smooth_blocks(&sums.gxx, cols, rows);
    let sxy = smooth_blocks(&sums.gxy, cols, rows);
    let se = smooth_blocks(&sums.energy, cols, rows);

    let mut angles = Vec::with_capacity(cols * rows);
    let mut coherence = Vec::with_capacity(cols * rows);
    for i in 0..cols * rows {
        let mag = sxx[i].hypot(sxy[i]);
        if se[i] <= 0.0 || mag == 0.0 {
            angles.push(0.0);
            coherence.push(0.0);
            continue;
        }
        let gradient_dir = 0.5 * sxy[i].atan2(sxx[i]);
        angles.push(fold_pi(gradient_dir + PI / 2.0));
        coherence.push((mag / se[i]).clamp(0.0, 1.0));
    }
    Ok(OrientationField { block_size: BLOCK_SIZE, cols, rows, image_width: w, image_height: h, angles, coherence })
}

/// Mean gradient magnitude per block (row-major).
pub fn block_gradient_magnitudes(img: &GrayImage) -> Vec<f64> {
    block_sums(img).mean_mag
}

/// Threshold used when none is configured: a fixed fraction of the strongest block.
pub fn default_mag_threshold(img: &GrayImage) -> f64 {
    let max = block_gradient_magnitudes(img).into_iter().fold(0.0, f64::max);
    DEFAULT_MAG_FRACTION * max
}

pub fn segment_roi(img: &GrayImage, field: &OrientationField, mag_threshold: f64) -> Result<RoiMask> {
    let (cols, rows) = grid_dims(img.width(), img.height());
    if field.cols != cols || field.rows != rows {
        return Err(Error::GridMismatch(format!(
            "field grid {}x{} does not match image grid {}x{}",
            field.cols, field.rows, cols, rows
        )));
    }
    let sums = block_sums(img);
    let flags = sums
        .mean_mag
        .iter()
        .zip(&sums.coverage)
        .map(|(&m, &cov)| m > 0.0 && m >= mag_threshold && cov >= MIN_BLOCK_COVERAGE)
        .collect();
    let raw = RoiMask { cols, rows, flags };
    let mut roi = close(&open(&raw));
    // closing must not resurrect edge blocks that were too small to estimate
    for (f, &cov) in roi.flags.iter_mut().zip(&sums.coverage) {
        *f &= cov >= MIN_BLOCK_COVERAGE;
    }
    Ok(roi)
}

/// ROI with the default contrast-relative threshold.
pub fn segment_roi_default(img: &GrayImage, field: &OrientationField) -> Result<RoiMask> {
    segment_roi(img, field, default_mag_threshold(img))
}

fn neighborhood(mask: &RoiMask, outside: bool, combine_all: bool) -> RoiMask {
    let mut out = RoiMask::filled(mask.cols, mask.rows, false);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            let mut all = true;
            let mut any = false;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let rr = r as isize + dr;
                    let cc = c as isize + dc;
                    let v = if rr < 0 || cc < 0 || rr >= mask.rows as isize || cc >= mask.cols as isize {
                        outside
                    } else {
                        mask.is_foreground(rr as usize, cc as usize)
                    };
                    all &= v;
                    any |= v;
                }
            }
            out.set(r, c, if combine_all { all } else { any });
        }
    }
    out
}

// Outside the grid counts as foreground for erosion and background for
// dilation, so a full mask is a fixed point of both opening and closing.
fn erode(mask: &RoiMask) -> RoiMask {
    neighborhood(mask, true, true)
}

fn dilate(mask: &RoiMask) -> RoiMask {
    neighborhood(mask, false, false)
}

fn open(mask: &RoiMask) -> RoiMask {
    dilate(&erode(mask))
}

fn close(mask: &RoiMask) -> RoiMask {
    erode(&dilate(mask))
}

/// Angle of the block whose center is nearest to `(x, y)`; ties go to the
/// smaller block index.
pub fn orientation_at(field: &OrientationField, x: f64, y: f64) -> Result<f64> {
    let (w, h) = (field.image_width as f64, field.image_height as f64);
    if !(x >= 0.0 && y >= 0.0 && x < w && y < h) {
        return Err(Error::OutOfBounds { x, y, width: field.image_width, height: field.image_height });
    }
    let col = nearest_index(x, field.block_size, field.cols);
    let row = nearest_index(y, field.block_size, field.rows);
    Ok(field.angle(row, col))
}

/// Block centers sit at `k * size + size / 2`; independent rounding per axis
/// with ties toward the lower index equals a row-major nearest-center scan.
fn nearest_index(v: f64, size: usize, count: usize) -> usize {
    let t = (v - size as f64 / 2.0) / size as f64;
    let lo = t.floor();
    let k = if t - lo > 0.5 { lo + 1.0 } else { lo };
    (k.max(0.0) as usize).min(count - 1)
}

/// CSV dump of the block grid: `row,col,angle,coherence,roi`.
pub fn field_to_csv(field: &OrientationField, roi: &RoiMask) -> String {
    let mut out = String::from("row,col,angle,coherence,roi\n");
    for r in 0..field.rows {
        for c in 0..field.cols {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                r,
                c,
                field.angle(r, c),
                field.coherence_at(r, c),
                u8::from(roi.is_foreground(r, c))
            );
        }
    }
    out
}
