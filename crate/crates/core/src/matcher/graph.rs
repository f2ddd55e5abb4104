use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use crate::template::VirtualMinutia;

use super::{Correspondence, GraphMatchParams};

/// Symmetric pairwise compatibility of correspondences, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl CompatibilityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `1 / (1 + exp(-tau (v - mu)))` for `v <= t`, otherwise 0.
#[inline]
pub fn truncated_sigmoid(v: f64, mu: f64, tau: f64, t: f64) -> f64 {
    if v <= t {
        1.0 / (1.0 + (-tau * (v - mu)).exp())
    } else {
        0.0
    }
}

/// Absolute angular difference folded into `[0, pi]`.
#[inline]
pub fn angle_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Two correspondences cannot both be kept if they reuse a minutia on either
/// side or pick both duals of one latent point.
#[inline]
pub fn conflicts(a: &Correspondence, b: &Correspondence, lat: &[VirtualMinutia]) -> bool {
    a.i1 == b.i1 || a.i2 == b.i2 || lat[a.i1].dual_group == lat[b.i1].dual_group
}

#[inline]
fn dist(a: &VirtualMinutia, b: &VirtualMinutia) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    (dx * dx + dy * dy).sqrt()
}

/// Angle between the two orientations and each orientation relative to the
/// segment from `a` to `b`.
#[inline]
fn pair_angles(a: &VirtualMinutia, b: &VirtualMinutia) -> [f64; 3] {
    let seg = (b.y - a.y).atan2(b.x - a.x);
    [a.theta - b.theta, a.theta - seg, b.theta - seg]
}

fn build(
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
    mut entry: impl FnMut(&Correspondence, &Correspondence) -> f64,
) -> CompatibilityMatrix {
    let n = corrs.len();
    if n < 2 {
        return CompatibilityMatrix::zeros(0);
    }
    let mut h = CompatibilityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&corrs[i], &corrs[j]);
            if conflicts(a, b, lat) {
                continue;
            }
            let v = entry(a, b);
            if v != 0.0 {
                h.set_sym(i, j, v);
            }
        }
    }
    h
}

/// Distance-only compatibility. Fewer than two correspondences give an empty matrix.
pub fn build_h2_modified(
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
    reference: &[VirtualMinutia],
    p: &GraphMatchParams,
) -> CompatibilityMatrix {
    build(corrs, lat, |a, b| {
        let d = (dist(&lat[a.i1], &lat[b.i1]) - dist(&reference[a.i2], &reference[b.i2])).abs();
        truncated_sigmoid(d, p.mu_d, p.tau_d, p.t_d)
    })
}

/// Distance term times three angular terms.
pub fn build_h2_original(
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
    reference: &[VirtualMinutia],
    p: &GraphMatchParams,
) -> CompatibilityMatrix {
    build(corrs, lat, |a, b| {
        let (la, lb, ra, rb) = (&lat[a.i1], &lat[b.i1], &reference[a.i2], &reference[b.i2]);
        let d = (dist(la, lb) - dist(ra, rb)).abs();
        let mut v = truncated_sigmoid(d, p.mu_d, p.tau_d, p.t_d);
        if v == 0.0 {
            return 0.0;
        }
        let (fl, fr) = (pair_angles(la, lb), pair_angles(ra, rb));
        for k in 0..3 {
            v *= truncated_sigmoid(angle_delta(fl[k], fr[k]), p.mu_a, p.tau_a, p.t_a);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    })
}

#[inline]
fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Principal eigenvector by power iteration from the uniform unit vector.
/// Returns `None` when `H` annihilates the iterate (e.g. `H = 0`).
pub fn power_iteration(h: &CompatibilityMatrix, eps: f64, max_iters: usize) -> Option<Vec<f64>> {
    let n = h.n;
    if n == 0 {
        return None;
    }
    // truncation leaves most impostor matrices sparse; iterate over nonzeros then
    let nnz = h.values.iter().filter(|&&x| x != 0.0).count();
    let sparse = (nnz < n * n / 3).then(|| {
        let mut starts = Vec::with_capacity(n + 1);
        let mut entries = Vec::with_capacity(nnz);
        for i in 0..n {
            starts.push(entries.len());
            let row = &h.values[i * n..(i + 1) * n];
            entries.extend(row.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(j, &x)| (j as u32, x)));
        }
        starts.push(entries.len());
        (starts, entries)
    });
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iters {
        match &sparse {
            Some((starts, entries)) => {
                for (i, out) in next.iter_mut().enumerate() {
                    *out = entries[starts[i]..starts[i + 1]].iter().map(|&(j, x)| x * v[j as usize]).sum();
                }
            }
            None => {
                for (i, out) in next.iter_mut().enumerate() {
                    *out = dot_f64(&h.values[i * n..(i + 1) * n], &v);
                }
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut next);
        if delta < eps {
            break;
        }
    }
    Some(v)
}

/// Pairwise objective: sum of `H[a][b]` over ordered pairs of the selection.
pub fn objective(h: &CompatibilityMatrix, selected: &[usize]) -> f64 {
    selected.iter().flat_map(|&a| selected.iter().map(move |&b| (a, b))).map(|(a, b)| h.get(a, b)).sum()
}

/// Power iteration plus greedy conflict-free discretization. Returns indices
/// into `corrs` in acceptance order.
pub fn spectral_select(
    h: &CompatibilityMatrix,
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
    p: &GraphMatchParams,
) -> Vec<usize> {
    debug_assert_eq!(h.n, corrs.len());
    let Some(x) = power_iteration(h, p.eps, p.max_iters) else {
        return Vec::new();
    };
    let max = x.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let floor = p.y_min * max;
    let mut alive = vec![true; corrs.len()];
    let mut out = Vec::new();
    loop {
        // largest component; ties go to the higher descriptor similarity, then lower index
        let best = (0..corrs.len()).filter(|&k| alive[k]).max_by(|&a, &b| {
            x[a].partial_cmp(&x[b])
                .unwrap_or(Ordering::Equal)
                .then(corrs[a].desc_sim.partial_cmp(&corrs[b].desc_sim).unwrap_or(Ordering::Equal))
                .then(b.cmp(&a))
        });
        let Some(k) = best else { break };
        if x[k] < floor || x[k] <= 0.0 {
            break;
        }
        out.push(k);
        alive[k] = false;
        for j in 0..corrs.len() {
            if alive[j] && conflicts(&corrs[k], &corrs[j], lat) {
                alive[j] = false;
            }
        }
    }
    out
}

pub fn spectral_match(
    h: &CompatibilityMatrix,
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
    p: &GraphMatchParams,
) -> Vec<Correspondence> {
    spectral_select(h, corrs, lat, p).into_iter().map(|k| corrs[k]).collect()
}
