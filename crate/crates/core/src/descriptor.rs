//! Fixed-length descriptors for virtual minutiae.
//!
//! Three 96x96 patches are sampled around each minutia in its own rotated frame
//! (one centered, two displaced along the frame's y axis). Each patch is encoded
//! by a training-free gradient encoder and projected to `l` values; the three
//! projections are concatenated into a descriptor of length `3 * l`.
//!
//! The encoder partitions the patch into 4x4 cells and records per cell a
//! magnitude-weighted, soft-binned histogram of gradient directions folded mod pi
//! plus the cell's intensity spread. Every feature is centered across the
//! sixteen cells, so the descriptor encodes how local ridge structure varies
//! within the patch rather than the ridge direction shared by every patch.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, FormatError, Result};
use crate::image::GrayImage;
use crate::template::{TextureTemplate, VirtualMinutia};

pub const PATCH_SIZE: usize = 96;
/// Intensity given to samples that fall outside the image.
pub const FILL_VALUE: f32 = 128.0;
pub const DEFAULT_PROJECTION_SEED: u64 = 0x5EED_7E47_0001;
pub const PATCH_LENGTHS: [usize; 3] = [32, 64, 128];
pub const DESCRIPTOR_LENGTHS: [usize; 3] = [96, 192, 384];

const CELLS: usize = 4;
const BINS: usize = 8;
const FEATURES: usize = CELLS * CELLS * (BINS + 1);

const FTD_MAGIC: [u8; 4] = *b"FTD1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    /// Displacement of the patch center in the minutia frame, pixels.
    pub offset_x: f64,
    pub offset_y: f64,
    pub size: usize,
}

impl PatchSpec {
    pub const CENTERED: Self = Self { offset_x: 0.0, offset_y: 0.0, size: PATCH_SIZE };
    pub const OFFSET_A: Self = Self { offset_x: 0.0, offset_y: -32.0, size: PATCH_SIZE };
    pub const OFFSET_B: Self = Self { offset_x: 0.0, offset_y: 32.0, size: PATCH_SIZE };

    /// Concatenation order of the built-in patches.
    pub const ALL: [Self; 3] = [Self::CENTERED, Self::OFFSET_A, Self::OFFSET_B];
}

/// Square intensity grid sampled around a minutia, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub size: usize,
    pub values: Vec<f32>,
}

impl Patch {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.values[v * self.size + u]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f32>,
}

impl Descriptor {
    /// All-zero descriptors mark low-quality minutiae (no texture in any patch).
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub fn check_patch_len(l: usize) -> Result<()> {
    if PATCH_LENGTHS.contains(&l) {
        Ok(())
    } else {
        Err(Error::UnsupportedLength(l))
    }
}

/// Samples `spec` around `m`. Row `v`, column `u` of the patch corresponds to
/// the frame offset `(u - size/2, v - size/2)` plus the spec offset, rotated by
/// the minutia angle; the minutia pixel therefore sits at `(size/2, size/2)`.
pub fn extract_patch(img: &GrayImage, m: &VirtualMinutia, spec: &PatchSpec) -> Patch {
    let n = spec.size;
    let half = (n / 2) as f64;
    let (s, c) = m.theta.sin_cos();
    let mut values = Vec::with_capacity(n * n);
    for v in 0..n {
        let dv = v as f64 - half + spec.offset_y;
        for u in 0..n {
            let du = u as f64 - half + spec.offset_x;
            let sx = m.x + c * du - s * dv;
            let sy = m.y + s * du + c * dv;
            values.push(sample_bilinear(img, sx, sy) as f32);
        }
    }
    Patch { size: n, values }
}

/// Bilinear intensity at `(x, y)`; points off the image read as [`FILL_VALUE`].
#[inline]
pub fn sample_bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = (img.width(), img.height());
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return FILL_VALUE as f64;
    }
    let px = img.pixels();
    // non-negative here, so truncation is floor
    let (x0, y0) = (x as usize, y as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let p00 = px[y0 * w + x0] as f64;
    let p10 = px[y0 * w + x1] as f64;
    let p01 = px[y1 * w + x0] as f64;
    let p11 = px[y1 * w + x1] as f64;
    let top = p00 + fx * (p10 - p00);
    let bottom = p01 + fx * (p11 - p01);
    top + fy * (bottom - top)
}

/// Random orthonormal map from the encoder's feature space to `l` values.
#[derive(Debug)]
pub struct Projection {
    pub len: usize,
    pub seed: u64,
    rows: Vec<f64>,
}

impl Projection {
    pub fn new(len: usize, seed: u64) -> Result<Self> {
        check_patch_len(len)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (len as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rows: Vec<f64> = Vec::with_capacity(len * FEATURES);
        while rows.len() < len * FEATURES {
            let mut row: Vec<f64> = (0..FEATURES).map(|_| StandardNormal.sample(&mut rng)).collect();
            // modified Gram-Schmidt against accepted rows
            for prev in rows.chunks_exact(FEATURES) {
                let d: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
                row.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
            let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 {
                rows.extend(row.iter().map(|a| a / norm));
            }
        }
        Ok(Self { len, seed, rows })
    }

    /// Shared instance per `(len, seed)`, built on first use.
    pub fn cached(len: usize, seed: u64) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<Projection>>>> = OnceLock::new();
        check_patch_len(len)?;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = map.get(&(len, seed)) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(Self::new(len, seed)?);
        map.insert((len, seed), Arc::clone(&p));
        Ok(p)
    }

    fn apply(&self, features: &[f64]) -> Vec<f64> {
        self.rows.chunks_exact(FEATURES).map(|row| row.iter().zip(features).map(|(a, b)| a * b).sum()).collect()
    }
}

/// `atan2` to about 1e-6 rad; the histogram soft-binning does not need more.
#[inline]
fn fast_atan2(y: f64, x: f64) -> f64 {
    let (ax, ay) = (x.abs(), y.abs());
    if ax == 0.0 && ay == 0.0 {
        return 0.0;
    }
    let (z, swap) = if ay > ax { (ax / ay, true) } else { (ay / ax, false) };
    let z2 = z * z;
    let mut a = z
        * (0.999_997_726_5
            + z2 * (-0.333_262_347_3 + z2 * (0.193_543_537_0 + z2 * (-0.116_432_874_8 + z2 * (0.052_653_323_4 + z2 * -0.011_721_200_0)))));
    if swap {
        a = FRAC_PI_2 - a;
    }
    if x < 0.0 {
        a = PI - a;
    }
    if y < 0.0 {
        -a
    } else {
        a
    }
}

/// Raw cell features of a patch, centered across cells.
pub fn patch_features(patch: &Patch) -> Vec<f64> {
    let n = patch.size;
    let cell = n / CELLS;
    let mut hist = [[0.0f64; BINS]; CELLS * CELLS];
    let mut samples = [0usize; CELLS * CELLS];
    let bins_per_radian = BINS as f64 / PI;
    let cell_of: Vec<usize> = (0..n).map(|i| (i / cell).min(CELLS - 1)).collect();
    let px = &patch.values;
    for v in 1..n - 1 {
        let (up, row, down) = (&px[(v - 1) * n..v * n], &px[v * n..(v + 1) * n], &px[(v + 1) * n..(v + 2) * n]);
        let row_cell = cell_of[v] * CELLS;
        for u in 1..n - 1 {
            let gx = (row[u + 1] - row[u - 1]) as f64 / 2.0;
            let gy = (down[u] - up[u]) as f64 / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            let ci = row_cell + cell_of[u];
            samples[ci] += 1;
            if mag == 0.0 {
                continue;
            }
            let mut angle = fast_atan2(gy, gx);
            if angle < 0.0 {
                angle += PI;
            }
            if angle >= PI {
                angle -= PI;
            }
            // t >= -0.5; shift by one so truncation acts as floor
            let t = angle * bins_per_radian - 0.5;
            let lo = (t + 1.0) as usize;
            let frac = t + 1.0 - lo as f64;
            let b0 = (lo + BINS - 1) % BINS;
            let b1 = (b0 + 1) % BINS;
            let h = &mut hist[ci];
            h[b0] += mag * (1.0 - frac);
            h[b1] += mag * frac;
        }
    }
    let area = (cell * cell) as f64;
    let mut spread = [0.0f64; CELLS * CELLS];
    for (ci, s) in spread.iter_mut().enumerate() {
        let (cy, cx) = (ci / CELLS, ci % CELLS);
        let (mut sum, mut sq) = (0.0, 0.0);
        for v in cy * cell..(cy + 1) * cell {
            for u in cx * cell..(cx + 1) * cell {
                let p = patch.get(u, v) as f64;
                sum += p;
                sq += p * p;
            }
        }
        let mean = sum / area;
        *s = (sq / area - mean * mean).max(0.0).sqrt();
    }

    // border cells have fewer gradient samples; per-sample averages keep the
    // expected histogram equal across cells so centering removes it
    for (h, &k) in hist.iter_mut().zip(&samples) {
        h.iter_mut().for_each(|v| *v /= k as f64);
    }
    let mut features = Vec::with_capacity(FEATURES);
    for b in 0..BINS {
        let mean = hist.iter().map(|h| h[b]).sum::<f64>() / (CELLS * CELLS) as f64;
        hist.iter_mut().for_each(|h| h[b] -= mean);
    }
    for h in &hist {
        features.extend_from_slice(h);
    }
    let mean_spread = spread.iter().sum::<f64>() / (CELLS * CELLS) as f64;
    features.extend(spread.iter().map(|s| s - mean_spread));
    features
}

/// Encodes one patch with the projection for `(l, DEFAULT_PROJECTION_SEED)`.
pub fn patch_descriptor(patch: &Patch, l: usize) -> Result<Vec<f32>> {
    patch_descriptor_seeded(patch, l, DEFAULT_PROJECTION_SEED)
}

pub fn patch_descriptor_seeded(patch: &Patch, l: usize, seed: u64) -> Result<Vec<f32>> {
    let projection = Projection::cached(l, seed)?;
    Ok(encode(patch, &projection))
}

fn encode(patch: &Patch, projection: &Projection) -> Vec<f32> {
    let projected = projection.apply(&patch_features(patch));
    let norm = projected.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return vec![0.0; projection.len];
    }
    projected.iter().map(|v| (v / norm) as f32).collect()
}

/// Concatenated three-patch descriptor of length `3 * l`, unit norm unless every
/// patch is textureless.
pub fn minutia_descriptor(img: &GrayImage, m: &VirtualMinutia, l: usize, seed: u64) -> Result<Descriptor> {
    let projection = Projection::cached(l, seed)?;
    let mut values = Vec::with_capacity(3 * l);
    for spec in &PatchSpec::ALL {
        values.extend(encode(&extract_patch(img, m, spec), &projection));
    }
    normalize_row(&mut values);
    Ok(Descriptor { values })
}

/// Scales a row to unit norm in place; zero rows stay zero.
pub fn normalize_row(row: &mut [f32]) {
    let norm = row.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|v| *v = (*v as f64 / norm) as f32);
    }
}

/// Parsed `FTD1` descriptor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMatrix {
    pub rows: usize,
    pub row_len: usize,
    pub values: Vec<f32>,
}

impl DescriptorMatrix {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + self.values.len() * 4);
        out.extend_from_slice(&FTD_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.row_len as u16).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < 10 {
            return Err(FormatError::Truncated { needed: 10, available: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if magic != FTD_MAGIC {
            return Err(FormatError::BadMagic { expected: FTD_MAGIC, found: magic });
        }
        let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let row_len = u16::from_le_bytes(bytes[8..10].try_into().expect("2 bytes")) as usize;
        let needed = 10 + rows * row_len * 4;
        if bytes.len() < needed {
            return Err(FormatError::Truncated { needed, available: bytes.len() });
        }
        if bytes.len() > needed {
            return Err(FormatError::TrailingBytes(bytes.len() - needed));
        }
        let values = bytes[10..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        Ok(Self { rows, row_len, values })
    }
}

/// Replaces a template's descriptors with externally computed rows, normalized
/// to unit length.
pub fn import_descriptors(template: &TextureTemplate, matrix: &DescriptorMatrix) -> Result<TextureTemplate> {
    if matrix.rows != template.len() || !DESCRIPTOR_LENGTHS.contains(&matrix.row_len) {
        return Err(Error::ImportMismatch {
            expected_rows: template.len(),
            found_rows: matrix.rows,
            found_len: matrix.row_len,
        });
    }
    let mut values = matrix.values.clone();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("descriptor import contains non-finite values".into()));
    }
    for row in values.chunks_exact_mut(matrix.row_len) {
        normalize_row(row);
    }
    let mut out = template.clone();
    out.descriptor_len = matrix.row_len;
    out.descriptors = values;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::VirtualMinutia;
    use rand::Rng;

    fn textured(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs: Vec<(f64, f64, f64)> =
            (0..w * h / 300).map(|_| (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64), rng.random_range(-60.0..60.0))).collect();
        GrayImage::from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            let mut v = 128.0 + 70.0 * ((0.4 * xf + 0.9 * yf) * 2.0 * PI / 9.0).cos();
            for &(bx, by, a) in &blobs {
                let d2 = (xf - bx).powi(2) + (yf - by).powi(2);
                if d2 < 36.0 {
                    v += a * (-d2 / 6.0).exp();
                }
            }
            v.clamp(0.0, 255.0).round() as u8
        })
        .unwrap()
    }

    fn minutia(x: f64, y: f64, theta: f64) -> VirtualMinutia {
        VirtualMinutia { x, y, theta, dual_group: 0 }
    }

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
        let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn zero_angle_patch_is_axis_aligned_crop() {
        let img = textured(200, 200, 1);
        let p = extract_patch(&img, &minutia(100.0, 90.0, 0.0), &PatchSpec::CENTERED);
        for v in 0..96 {
            for u in 0..96 {
                assert_eq!(p.get(u, v), img.get(100 + u - 48, 90 + v - 48) as f32);
            }
        }
    }

    #[test]
    fn half_turn_patch_is_point_reflection_about_minutia() {
        let img = textured(200, 200, 2);
        let m0 = minutia(100.0, 100.0, 0.0);
        let p0 = extract_patch(&img, &m0, &PatchSpec::CENTERED);
        let pi = extract_patch(&img, &minutia(100.0, 100.0, PI), &PatchSpec::CENTERED);
        for v in 1..96 {
            for u in 1..96 {
                assert!((pi.get(u, v) - p0.get(96 - u, 96 - v)).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn out_of_image_fraction_matches_geometry() {
        let img = GrayImage::filled(200, 200, 50).unwrap();
        let p = extract_patch(&img, &minutia(10.0, 100.0, 0.0), &PatchSpec::CENTERED);
        let filled = p.values.iter().filter(|&&v| v == FILL_VALUE).count();
        // columns u with 10 + u - 48 < 0
        assert_eq!(filled, 38 * 96);
        // quarter turn near the top edge: rows of the frame map onto image columns
        let q = extract_patch(&img, &minutia(100.0, 10.5, PI / 2.0), &PatchSpec::CENTERED);
        let filled = q.values.iter().filter(|&&v| v == FILL_VALUE).count();
        // sample y = 10.5 + (u - 48) < 0  => u < 38
        assert_eq!(filled, 38 * 96);
        // corner: both axes clipped
        let r = extract_patch(&img, &minutia(10.0, 20.0, 0.0), &PatchSpec::CENTERED);
        let filled = r.values.iter().filter(|&&v| v == FILL_VALUE).count();
        assert_eq!(filled, 96 * 96 - (96 - 38) * (96 - 28));
    }

    #[test]
    fn identical_patches_identical_descriptors() {
        let img = textured(200, 200, 3);
        let p = extract_patch(&img, &minutia(100.0, 100.0, 0.4), &PatchSpec::CENTERED);
        let a = patch_descriptor(&p, 64).unwrap();
        let b = patch_descriptor(&p.clone(), 64).unwrap();
        assert_eq!(a, b);
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_patch_gives_zero_vector() {
        let p = Patch { size: 96, values: vec![77.0; 96 * 96] };
        let d = patch_descriptor(&p, 32).unwrap();
        assert_eq!(d.len(), 32);
        assert!(d.iter().all(|&v| v == 0.0));
        let img = GrayImage::filled(300, 300, 77).unwrap();
        let desc = minutia_descriptor(&img, &minutia(150.0, 150.0, 1.0), 64, DEFAULT_PROJECTION_SEED).unwrap();
        assert!(desc.is_zero());
        assert_eq!(desc.values.len(), 192);
    }

    #[test]
    fn contrast_scaling_preserves_descriptor() {
        let img = textured(200, 200, 4);
        let p = extract_patch(&img, &minutia(100.0, 100.0, 0.9), &PatchSpec::CENTERED);
        let scaled = Patch { size: 96, values: p.values.iter().map(|v| v * 2.0).collect() };
        let a = patch_descriptor(&p, 128).unwrap();
        let b = patch_descriptor(&scaled, 128).unwrap();
        assert!(cosine(&a, &b) >= 0.99);
    }

    #[test]
    fn unsupported_length_rejected() {
        let p = Patch { size: 96, values: vec![0.0; 96 * 96] };
        assert!(matches!(patch_descriptor(&p, 48), Err(Error::UnsupportedLength(48))));
    }

    #[test]
    fn descriptor_lengths_are_three_times_patch_length() {
        let img = textured(220, 220, 5);
        for (l, ld) in PATCH_LENGTHS.iter().zip(DESCRIPTOR_LENGTHS) {
            let d = minutia_descriptor(&img, &minutia(110.0, 110.0, 0.3), *l, DEFAULT_PROJECTION_SEED).unwrap();
            assert_eq!(d.values.len(), ld);
            let norm: f64 = d.values.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn projection_is_orthonormal() {
        let p = Projection::new(128, 9).unwrap();
        for i in 0..128 {
            for j in 0..128 {
                let d: f64 = p.rows[i * FEATURES..(i + 1) * FEATURES]
                    .iter()
                    .zip(&p.rows[j * FEATURES..(j + 1) * FEATURES])
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let img = textured(260, 260, 6);
        let shifted = GrayImage::from_fn(260, 260, |x, y| if x >= 7 && y >= 3 { img.get(x - 7, y - 3) } else { 0 }).unwrap();
        let a = minutia_descriptor(&img, &minutia(120.0, 125.0, 0.77), 64, DEFAULT_PROJECTION_SEED).unwrap();
        let b = minutia_descriptor(&shifted, &minutia(127.0, 128.0, 0.77), 64, DEFAULT_PROJECTION_SEED).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn quarter_turn_equivariance() {
        let img = textured(240, 240, 7);
        let rot = img.rotate90();
        let m = minutia(110.0, 123.0, 0.35);
        // (x, y) -> (h - 1 - y, x), direction angle + pi/2
        let mr = minutia(239.0 - 123.0, 110.0, 0.35 + PI / 2.0);
        let a = minutia_descriptor(&img, &m, 64, DEFAULT_PROJECTION_SEED).unwrap();
        let b = minutia_descriptor(&rot, &mr, 64, DEFAULT_PROJECTION_SEED).unwrap();
        assert!(cosine(&a.values, &b.values) >= 0.98);
    }

    #[test]
    fn noise_patches_are_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum = 0.0;
        let noise = |rng: &mut ChaCha8Rng| {
            let values = (0..96 * 96)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    (128.0 + 30.0 * z) as f32
                })
                .collect();
            Patch { size: 96, values }
        };
        for _ in 0..1000 {
            let a = patch_descriptor(&noise(&mut rng), 64).unwrap();
            let b = patch_descriptor(&noise(&mut rng), 64).unwrap();
            sum += cosine(&a, &b);
        }
        let mean = sum / 1000.0;
        assert!(mean.abs() < 0.05, "mean cosine {mean}");
    }

    #[test]
    fn ftd_round_trip_and_errors() {
        let m = DescriptorMatrix { rows: 2, row_len: 96, values: (0..192).map(|i| i as f32).collect() };
        let bytes = m.encode();
        assert_eq!(DescriptorMatrix::decode(&bytes).unwrap(), m);
        assert!(matches!(DescriptorMatrix::decode(&bytes[..bytes.len() - 1]), Err(FormatError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(DescriptorMatrix::decode(&bad), Err(FormatError::BadMagic { .. })));
    }
}
