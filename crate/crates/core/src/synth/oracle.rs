use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matcher::{build_h2_modified, build_h2_original, conflicts, objective, CompatibilityMatrix, Correspondence, GraphMatchParams};
use crate::template::VirtualMinutia;

/// Largest instance the exhaustive search accepts.
pub const MAX_ORACLE_SIZE: usize = 12;

/// A graph-matching problem: correspondences between two minutia sets with
/// their compatibility matrix. `planted` lists the correspondences built to be
/// correct, when the generator knows them.
#[derive(Debug, Clone)]
pub struct Instance {
    pub corrs: Vec<Correspondence>,
    pub lat: Vec<VirtualMinutia>,
    pub reference: Vec<VirtualMinutia>,
    pub h: CompatibilityMatrix,
    pub planted: Vec<usize>,
}

/// Exhaustive maximizer of the pairwise objective over conflict-free subsets.
/// Ties go to the smaller subset, then the lexicographically smaller one.
pub fn brute_force_match(
    h: &CompatibilityMatrix,
    corrs: &[Correspondence],
    lat: &[VirtualMinutia],
) -> Result<(Vec<usize>, f64)> {
    let n = corrs.len();
    if n > MAX_ORACLE_SIZE {
        return Err(Error::OracleTooLarge(n));
    }
    if h.n != n && !(n < 2 && h.n == 0) {
        return Err(Error::InvalidParams(format!("{} correspondences for a {}x{} matrix", n, h.n, h.n)));
    }
    let clash: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && conflicts(&corrs[i], &corrs[j], lat)).fold(0u32, |m, j| m | 1 << j))
        .collect();
    let members = |mask: u32| (0..n).filter(move |&i| mask >> i & 1 == 1);
    let mut best: (Vec<usize>, f64) = (Vec::new(), 0.0);
    for mask in 1u32..(1u32 << n) {
        if members(mask).any(|i| clash[i] & mask != 0) {
            continue;
        }
        let set: Vec<usize> = members(mask).collect();
        let obj = if h.n == 0 { 0.0 } else { objective(h, &set) };
        let tol = 1e-12 * best.1.abs().max(1.0);
        let better = match obj - best.1 {
            d if d > tol => true,
            d if d < -tol => false,
            _ => match set.len().cmp(&best.0.len()) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => set < best.0,
            },
        };
        if better {
            best = (set, obj);
        }
    }
    Ok(best)
}

fn point(rng: &mut ChaCha8Rng, extent: f64, group: u32) -> VirtualMinutia {
    VirtualMinutia {
        x: rng.random_range(0.0..extent),
        y: rng.random_range(0.0..extent),
        theta: rng.random_range(0.0..TAU),
        dual_group: group,
    }
}

/// Random geometric instance of `n` correspondences: a noisy rigid copy of some
/// latent points supplies roughly half of them, the rest pair random points.
/// Latent points come in dual pairs, as in real templates.
pub fn random_instance(n: usize, seed: u64, original: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pts = n.max(2);
    let mut lat = Vec::with_capacity(2 * n_pts);
    for g in 0..n_pts as u32 {
        let p = point(&mut rng, 160.0, g);
        lat.push(p);
        lat.push(VirtualMinutia { theta: (p.theta + PI).rem_euclid(TAU), ..p });
    }
    let phi = rng.random_range(0.0..TAU);
    let (s, c) = phi.sin_cos();
    let (tx, ty) = (rng.random_range(0.0..300.0), rng.random_range(0.0..300.0));
    let pos = Normal::new(0.0, 4.0).expect("sigma");
    let ang = Normal::new(0.0, 0.15).expect("sigma");
    // reference: the transformed latent points first, then clutter
    let mut reference: Vec<VirtualMinutia> = lat
        .iter()
        .step_by(2)
        .map(|m| VirtualMinutia {
            x: c * m.x - s * m.y + tx + pos.sample(&mut rng),
            y: s * m.x + c * m.y + ty + pos.sample(&mut rng),
            theta: (m.theta + phi + ang.sample(&mut rng)).rem_euclid(TAU),
            dual_group: 0,
        })
        .collect();
    for g in 0..n_pts as u32 {
        let p = point(&mut rng, 460.0, g);
        reference.push(p);
    }
    let n_true = n / 2;
    let mut corrs: Vec<Correspondence> = Vec::with_capacity(n);
    let mut planted = Vec::new();
    while corrs.len() < n {
        let cand = if corrs.len() < n_true {
            let g = rng.random_range(0..n_pts);
            Correspondence { i1: 2 * g + rng.random_range(0..2), i2: g, desc_sim: rng.random_range(0.3f32..1.0) }
        } else {
            Correspondence {
                i1: rng.random_range(0..lat.len()),
                i2: rng.random_range(0..reference.len()),
                desc_sim: rng.random_range(0.0f32..0.8),
            }
        };
        if corrs.iter().any(|c| c.i1 == cand.i1 && c.i2 == cand.i2) {
            continue;
        }
        if corrs.len() < n_true {
            planted.push(corrs.len());
        }
        corrs.push(cand);
    }
    let p = GraphMatchParams::default();
    let h = if original { build_h2_original(&corrs, &lat, &reference, &p) } else { build_h2_modified(&corrs, &lat, &reference, &p) };
    Instance { corrs, lat, reference, h, planted }
}

/// `n_true` mutually compatible correspondences (pairwise entry `weight`) and
/// `n_distract` distractors, each conflicting with one planted correspondence
/// and only weakly compatible (below `0.05`) with everything else.
pub fn planted_clique_instance(n_true: usize, n_distract: usize, weight: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_lat = n_true + n_distract;
    let lat: Vec<VirtualMinutia> = (0..n_lat as u32).map(|g| point(&mut rng, 200.0, g)).collect();
    let reference: Vec<VirtualMinutia> = (0..n_lat as u32).map(|g| point(&mut rng, 200.0, g)).collect();
    let mut corrs: Vec<Correspondence> = (0..n_true).map(|i| Correspondence { i1: i, i2: i, desc_sim: 1.0 }).collect();
    for d in 0..n_distract {
        let victim = rng.random_range(0..n_true.max(1));
        let other = n_true + d;
        let (i1, i2) = if rng.random_bool(0.5) { (victim, other) } else { (other, victim) };
        corrs.push(Correspondence { i1, i2, desc_sim: rng.random_range(0.0f32..1.0) });
    }
    // shuffle so the planted set is not simply a prefix
    let mut order: Vec<usize> = (0..corrs.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let corrs: Vec<Correspondence> = order.iter().map(|&k| corrs[k]).collect();
    let planted_flag: Vec<bool> = order.iter().map(|&k| k < n_true).collect();
    let n = corrs.len();
    let mut h = CompatibilityMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            if conflicts(&corrs[i], &corrs[j], &lat) {
                continue;
            }
            let v = if planted_flag[i] && planted_flag[j] { weight } else { rng.random_range(0.0..0.05) };
            h.values[i * n + j] = v;
            h.values[j * n + i] = v;
        }
    }
    let planted = (0..n).filter(|&k| planted_flag[k]).collect();
    Instance { corrs, lat, reference, h, planted }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::spectral_select;

    fn own_groups(n: usize) -> Vec<VirtualMinutia> {
        (0..n as u32).map(|g| VirtualMinutia { x: 0.0, y: 0.0, theta: 0.0, dual_group: g }).collect()
    }

    #[test]
    fn zero_matrix_gives_empty_optimum() {
        let lat = own_groups(4);
        let corrs: Vec<_> = (0..4).map(|i| Correspondence { i1: i, i2: i, desc_sim: 1.0 }).collect();
        let (set, obj) = brute_force_match(&CompatibilityMatrix::zeros(4), &corrs, &lat).unwrap();
        assert!(set.is_empty());
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn single_pair_counts_both_entries() {
        let lat = own_groups(2);
        let corrs: Vec<_> = (0..2).map(|i| Correspondence { i1: i, i2: i, desc_sim: 1.0 }).collect();
        let h = CompatibilityMatrix { n: 2, values: vec![0.0, 0.8, 0.8, 0.0] };
        let (set, obj) = brute_force_match(&h, &corrs, &lat).unwrap();
        assert_eq!(set, vec![0, 1]);
        assert!((obj - 1.6).abs() < 1e-12);
    }

    #[test]
    fn too_large_rejected() {
        let lat = own_groups(13);
        let corrs: Vec<_> = (0..13).map(|i| Correspondence { i1: i, i2: i, desc_sim: 1.0 }).collect();
        assert!(matches!(
            brute_force_match(&CompatibilityMatrix::zeros(13), &corrs, &lat),
            Err(Error::OracleTooLarge(13))
        ));
    }

    #[test]
    fn optimum_is_conflict_free_and_bounds_spectral() {
        let p = GraphMatchParams::default();
        for seed in 0..30 {
            let inst = random_instance(8, seed, seed % 2 == 1);
            let (set, obj) = brute_force_match(&inst.h, &inst.corrs, &inst.lat).unwrap();
            for (a, &i) in set.iter().enumerate() {
                for &j in &set[a + 1..] {
                    assert!(!conflicts(&inst.corrs[i], &inst.corrs[j], &inst.lat));
                }
            }
            let spectral = spectral_select(&inst.h, &inst.corrs, &inst.lat, &p);
            assert!(objective(&inst.h, &spectral) <= obj + 1e-9);
        }
    }

    #[test]
    fn planted_six_plus_six_recovered() {
        let p = GraphMatchParams::default();
        for seed in 0..20 {
            let inst = planted_clique_instance(6, 6, 0.99, seed);
            let (mut best, _) = brute_force_match(&inst.h, &inst.corrs, &inst.lat).unwrap();
            best.sort();
            assert_eq!(best, inst.planted);
            let mut got = spectral_select(&inst.h, &inst.corrs, &inst.lat, &p);
            got.sort();
            assert_eq!(got, inst.planted, "seed {seed}");
        }
    }

    #[test]
    fn two_cliques_oracle_prefers_larger() {
        let n = 8;
        let lat = own_groups(n);
        let corrs: Vec<_> = (0..n).map(|i| Correspondence { i1: i, i2: i, desc_sim: 1.0 }).collect();
        let mut h = CompatibilityMatrix::zeros(n);
        for clique in [0..5, 5..8] {
            for i in clique.clone() {
                for j in clique.clone().filter(|&j| j != i) {
                    h.values[i * n + j] = 0.9;
                }
            }
        }
        // the cliques do not conflict, so the optimum takes both; make them exclusive
        let mut corrs2 = corrs.clone();
        for (k, c) in corrs2.iter_mut().enumerate().skip(5) {
            c.i2 = k - 5;
        }
        let (set, _) = brute_force_match(&h, &corrs2, &lat).unwrap();
        assert_eq!(set, vec![0, 1, 2, 3, 4]);
        let mut got = spectral_select(&h, &corrs2, &lat, &GraphMatchParams::default());
        got.sort();
        assert_eq!(got, set);
        assert_eq!(brute_force_match(&h, &corrs, &lat).unwrap().0, (0..8).collect::<Vec<_>>());
    }
}
