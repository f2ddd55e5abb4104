use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::template::TextureTemplate;

/// Dense latent x reference similarity table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
    pub normalized: bool,
}

impl SimilarityMatrix {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Correspondence {
    /// Latent minutia index.
    pub i1: usize,
    /// Reference minutia index.
    pub i2: usize,
    /// Raw cosine similarity of the two descriptors.
    pub desc_sim: f32,
}

#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f32>() + tail
}

/// Cosine similarity of every latent/reference descriptor pair. Rows are unit
/// length (or zero for low-quality minutiae), so this is a plain dot product.
pub fn similarity_matrix(lat: &TextureTemplate, reference: &TextureTemplate) -> Result<SimilarityMatrix> {
    if lat.descriptor_len != reference.descriptor_len {
        return Err(Error::DescriptorLenMismatch { latent: lat.descriptor_len, reference: reference.descriptor_len });
    }
    let (rows, cols) = (lat.len(), reference.len());
    let mut values = Vec::with_capacity(rows * cols);
    for a in 0..rows {
        let da = lat.descriptor(a);
        values.extend((0..cols).map(|b| dot(da, reference.descriptor(b))));
    }
    Ok(SimilarityMatrix { rows, cols, values, normalized: false })
}

/// Clamps negatives to zero, then applies row-sum and column-sum division twice.
pub fn normalize_similarity(s: &SimilarityMatrix) -> SimilarityMatrix {
    let (rows, cols) = (s.rows, s.cols);
    let mut v: Vec<f32> = s.values.iter().map(|&x| x.max(0.0)).collect();
    let mut col_sums = vec![0.0f64; cols];
    for _ in 0..2 {
        for row in v.chunks_exact_mut(cols.max(1)) {
            let sum: f64 = row.iter().map(|&x| x as f64).sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|x| *x = (*x as f64 / sum) as f32);
            }
        }
        col_sums.iter_mut().for_each(|c| *c = 0.0);
        for row in v.chunks_exact(cols.max(1)) {
            col_sums.iter_mut().zip(row).for_each(|(c, &x)| *c += x as f64);
        }
        for row in v.chunks_exact_mut(cols.max(1)) {
            for (x, &c) in row.iter_mut().zip(&col_sums) {
                if c > 0.0 {
                    *x = (*x as f64 / c) as f32;
                }
            }
        }
    }
    if rows == 0 || cols == 0 {
        v.clear();
    }
    SimilarityMatrix { rows, cols, values: v, normalized: true }
}

/// The `n` largest positive entries of the normalized matrix, ordered by value
/// then by `(i1, i2)`. Each correspondence carries the raw similarity from `raw`.
pub fn select_top_n(normalized: &SimilarityMatrix, raw: &SimilarityMatrix, n: usize) -> Vec<Correspondence> {
    let cols = normalized.cols;
    let mut cand: Vec<(f32, u32)> = normalized
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let order = |a: &(f32, u32), b: &(f32, u32)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    if n == 0 {
        return Vec::new();
    }
    if cand.len() > n {
        cand.select_nth_unstable_by(n - 1, order);
        cand.truncate(n);
    }
    cand.sort_unstable_by(order);
    cand.into_iter()
        .map(|(_, idx)| {
            let idx = idx as usize;
            let (i1, i2) = (idx / cols, idx % cols);
            Correspondence { i1, i2, desc_sim: raw.get(i1, i2) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, values: Vec<f32>) -> SimilarityMatrix {
        SimilarityMatrix { rows, cols, values, normalized: false }
    }

    #[test]
    fn uniform_matrix_stays_uniform() {
        let n = normalize_similarity(&mat(3, 4, vec![0.7; 12]));
        let first = n.values[0];
        assert!(n.values.iter().all(|&v| (v - first).abs() < 1e-7));
        assert!(n.normalized);
    }

    #[test]
    fn single_positive_entry_becomes_one() {
        let mut v = vec![-0.3f32; 9];
        v[5] = 0.2;
        let n = normalize_similarity(&mat(3, 3, v));
        assert_eq!(n.values[5], 1.0);
        assert!(n.values.iter().enumerate().all(|(i, &x)| i == 5 || x == 0.0));
    }

    #[test]
    fn top_n_two_by_two() {
        let raw = mat(2, 2, vec![0.1, 0.9, 0.5, 0.3]);
        let norm = SimilarityMatrix { normalized: true, ..raw.clone() };
        let top = select_top_n(&norm, &raw, 2);
        assert_eq!(top.iter().map(|c| (c.i1, c.i2)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        assert_eq!(top[0].desc_sim, 0.9);
    }

    #[test]
    fn top_n_larger_than_matrix_returns_all_positive() {
        let raw = mat(2, 3, vec![0.1, 0.0, 0.5, -0.3, 0.2, 0.2]);
        let norm = SimilarityMatrix { normalized: true, ..raw.clone() };
        let top = select_top_n(&norm, &raw, 100);
        assert_eq!(top.iter().map(|c| (c.i1, c.i2)).collect::<Vec<_>>(), vec![(0, 2), (1, 1), (1, 2), (0, 0)]);
    }

    #[test]
    fn dot_handles_every_length() {
        for len in [1usize, 7, 8, 9, 96, 100] {
            let a: Vec<f32> = (0..len).map(|i| i as f32 * 0.5).collect();
            let b: Vec<f32> = (0..len).map(|i| 1.0 - i as f32 * 0.25).collect();
            let naive: f32 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() <= 1e-3 * naive.abs().max(1.0));
        }
    }
}
