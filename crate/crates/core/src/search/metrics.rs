use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SearchResult;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub comparisons: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub total_ms: f64,
}

/// Nearest-rank percentiles of per-comparison wall times.
pub fn latency_stats(times_ms: &[f64]) -> LatencyStats {
    if times_ms.is_empty() {
        return LatencyStats::default();
    }
    let mut sorted = times_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pct = |p: f64| {
        let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    };
    let total: f64 = sorted.iter().sum();
    LatencyStats {
        comparisons: sorted.len(),
        mean_ms: total / sorted.len() as f64,
        p50_ms: pct(50.0),
        p95_ms: pct(95.0),
        total_ms: total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcCurve {
    /// `rates[k - 1]` is the rank-k identification rate.
    pub rates: Vec<f64>,
    pub queries: usize,
    /// Queries whose mate does not appear anywhere in their ranked list.
    pub missing_mates: Vec<String>,
}

impl CmcCurve {
    pub fn rank(&self, k: usize) -> f64 {
        assert!(k >= 1, "ranks start at 1");
        self.rates.get(k - 1).or(self.rates.last()).copied().unwrap_or(0.0)
    }

    /// `rank,rate` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,rate\n");
        for (k, r) in self.rates.iter().enumerate() {
            s.push_str(&format!("{},{r}\n", k + 1));
        }
        s
    }
}

/// 1-based position of `mate` in the ranked candidates.
pub fn rank_of(result: &SearchResult, mate: &str) -> Option<usize> {
    result.candidates.iter().position(|c| c.subject_id == mate).map(|p| p + 1)
}

/// Rank-k rates for `k = 1..=max_rank`. Every query needs an entry in `mates`;
/// a mate missing from the results never counts as retrieved.
pub fn cmc(results: &[SearchResult], mates: &HashMap<String, String>, max_rank: usize) -> Result<CmcCurve> {
    if max_rank == 0 {
        return Err(Error::InvalidParams("max rank must be at least 1".into()));
    }
    let mut hits = vec![0usize; max_rank];
    let mut missing_mates = Vec::new();
    for r in results {
        let mate = mates
            .get(&r.query_id)
            .ok_or_else(|| Error::InvalidParams(format!("no mate listed for query {:?}", r.query_id)))?;
        match rank_of(r, mate) {
            Some(k) if k <= max_rank => hits[k - 1] += 1,
            Some(_) => {}
            None => missing_mates.push(r.query_id.clone()),
        }
    }
    let n = results.len();
    let mut acc = 0;
    let rates = hits
        .iter()
        .map(|h| {
            acc += h;
            if n == 0 {
                0.0
            } else {
                acc as f64 / n as f64
            }
        })
        .collect();
    Ok(CmcCurve { rates, queries: n, missing_mates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Operating points for "accept if score >= threshold", one per distinct
/// score from high to low, starting at `(0, 0)` above every score.
pub fn roc_curve(genuine: &[f64], impostor: &[f64]) -> Result<Vec<RocPoint>> {
    if genuine.is_empty() {
        return Err(Error::Empty("genuine scores"));
    }
    if impostor.is_empty() {
        return Err(Error::Empty("impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(Error::InvalidParams("non-finite score".into()));
    }
    let mut all: Vec<(f64, bool)> = genuine.iter().map(|&s| (s, true)).chain(impostor.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (ng, ni) = (genuine.len() as f64, impostor.len() as f64);
    let mut out = vec![RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint { threshold: t, tpr: tp as f64 / ng, fpr: fp as f64 / ni });
    }
    Ok(out)
}

/// Trapezoidal area under an ROC curve ordered by increasing FPR.
pub fn auc(curve: &[RocPoint]) -> f64 {
    curve.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}
