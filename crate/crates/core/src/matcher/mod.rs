//! Template comparison: descriptor similarity, normalization, top-N selection,
//! then two rounds of second-order graph matching.

mod graph;
mod similarity;

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::template::TextureTemplate;

pub use graph::{
    angle_delta, build_h2_modified, build_h2_original, conflicts, objective, power_iteration, spectral_match,
    spectral_select, truncated_sigmoid, CompatibilityMatrix,
};
pub use similarity::{normalize_similarity, select_top_n, similarity_matrix, Correspondence, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphMatchParams {
    /// Correspondences kept after normalization.
    pub top_n: usize,
    pub mu_d: f64,
    pub tau_d: f64,
    pub t_d: f64,
    pub mu_a: f64,
    pub tau_a: f64,
    pub t_a: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub y_min: f64,
}

impl Default for GraphMatchParams {
    fn default() -> Self {
        Self {
            top_n: 200,
            mu_d: 20.0,
            tau_d: -0.3,
            t_d: 40.0,
            mu_a: PI / 9.0,
            tau_a: -12.0,
            t_a: PI / 4.0,
            eps: 1e-6,
            max_iters: 100,
            y_min: 0.1,
        }
    }
}

impl GraphMatchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.top_n < 1 {
            return bad("top_n must be at least 1");
        }
        if !(self.t_d > 0.0) {
            return bad("t_d must be positive");
        }
        if !(self.tau_d < 0.0) || !(self.tau_a < 0.0) {
            return bad("tau_d and tau_a must be negative");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(0.0..=1.0).contains(&self.y_min) {
            return bad("y_min must lie in [0, 1]");
        }
        if ![self.mu_d, self.mu_a, self.t_a].iter().all(|v| v.is_finite()) {
            return bad("sigmoid parameters must be finite");
        }
        Ok(())
    }
}

/// Wall time per pipeline stage, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub sim_ms: f64,
    pub norm_ms: f64,
    pub topn_ms: f64,
    pub graph_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.sim_ms + self.norm_ms + self.topn_ms + self.graph_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    /// Sum of raw descriptor similarities over the final correspondences.
    pub score: f64,
    pub correspondences: Vec<Correspondence>,
    /// Correspondences surviving the distance-only round.
    pub stage1: Vec<Correspondence>,
    pub n_top: usize,
    pub timings: StageTimings,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn score_of(corrs: &[Correspondence]) -> f64 {
    corrs.iter().map(|c| c.desc_sim as f64).sum()
}

/// Full comparison of a latent against a reference template.
pub fn match_templates(lat: &TextureTemplate, reference: &TextureTemplate, p: &GraphMatchParams) -> Result<MatchResult> {
    p.validate()?;
    if lat.descriptor_len != reference.descriptor_len {
        return Err(Error::DescriptorLenMismatch { latent: lat.descriptor_len, reference: reference.descriptor_len });
    }
    let mut timings = StageTimings::default();
    if lat.is_empty() || reference.is_empty() {
        return Ok(MatchResult { score: 0.0, correspondences: Vec::new(), stage1: Vec::new(), n_top: 0, timings });
    }

    let t = Instant::now();
    let sim = similarity_matrix(lat, reference)?;
    timings.sim_ms = ms(t);

    let t = Instant::now();
    let norm = normalize_similarity(&sim);
    timings.norm_ms = ms(t);

    let t = Instant::now();
    let top = select_top_n(&norm, &sim, p.top_n);
    timings.topn_ms = ms(t);

    let t = Instant::now();
    let (lm, rm) = (&lat.minutiae, &reference.minutiae);
    let stage1 = if top.len() < 2 {
        top.clone()
    } else {
        let h = build_h2_modified(&top, lm, rm, p);
        spectral_match(&h, &top, lm, p)
    };
    let correspondences = if stage1.len() < 2 {
        stage1.clone()
    } else {
        let h = build_h2_original(&stage1, lm, rm, p);
        spectral_match(&h, &stage1, lm, p)
    };
    timings.graph_ms = ms(t);

    Ok(MatchResult { score: score_of(&correspondences), correspondences, stage1, n_top: top.len(), timings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{TemplateKind, Variant, VirtualMinutia};

    fn template(kind: TemplateKind, pts: &[(f64, f64, f64, u32)], desc: Vec<f32>) -> TextureTemplate {
        TextureTemplate {
            kind,
            variant: Variant::Raw,
            stride: 32,
            minutiae: pts.iter().map(|&(x, y, theta, dual_group)| VirtualMinutia { x, y, theta, dual_group }).collect(),
            descriptors: desc,
            descriptor_len: 96,
        }
    }

    fn one_hot(rows: usize) -> Vec<f32> {
        let mut v = vec![0.0; rows * 96];
        for r in 0..rows {
            v[r * 96 + r] = 1.0;
        }
        v
    }

    #[test]
    fn defaults_valid_and_bad_params_rejected() {
        GraphMatchParams::default().validate().unwrap();
        for p in [
            GraphMatchParams { top_n: 0, ..Default::default() },
            GraphMatchParams { tau_d: 0.3, ..Default::default() },
            GraphMatchParams { tau_a: 0.0, ..Default::default() },
            GraphMatchParams { t_d: 0.0, ..Default::default() },
            GraphMatchParams { eps: 0.0, ..Default::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn exact_subset_recovers_all_pairs() {
        let pts: Vec<_> = (0..6).map(|i| (40.0 * i as f64, 25.0 * (i % 3) as f64, 0.4 * i as f64, i as u32)).collect();
        let reference = template(TemplateKind::Reference, &pts, one_hot(6));
        let lat_pts: Vec<_> = pts[1..5].iter().map(|&(x, y, t, g)| (x + 7.0, y - 3.0, t, g)).collect();
        let mut desc = Vec::new();
        for r in 1..5 {
            desc.extend_from_slice(&one_hot(6)[r * 96..(r + 1) * 96]);
        }
        let lat = template(TemplateKind::Reference, &lat_pts, desc);
        let res = match_templates(&lat, &reference, &GraphMatchParams::default()).unwrap();
        let mut pairs: Vec<_> = res.correspondences.iter().map(|c| (c.i1, c.i2)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!((res.score - 4.0).abs() < 1e-9);
    }

    #[test]
    fn empty_side_scores_zero() {
        let reference = template(TemplateKind::Reference, &[(0.0, 0.0, 0.0, 0)], one_hot(1));
        let lat = TextureTemplate::empty(TemplateKind::Latent, Variant::Raw, 32, 96);
        let res = match_templates(&lat, &reference, &GraphMatchParams::default()).unwrap();
        assert_eq!(res.score, 0.0);
        assert!(res.correspondences.is_empty());
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = TextureTemplate::empty(TemplateKind::Latent, Variant::Raw, 32, 96);
        let b = TextureTemplate::empty(TemplateKind::Reference, Variant::Raw, 32, 192);
        assert!(matches!(match_templates(&a, &b, &GraphMatchParams::default()), Err(Error::DescriptorLenMismatch { .. })));
    }

    #[test]
    fn score_is_sum_of_raw_similarities() {
        let c = |s| Correspondence { i1: 0, i2: 0, desc_sim: s };
        assert!((score_of(&[c(0.9), c(0.8)]) - 1.7).abs() < 1e-6);
    }
}
