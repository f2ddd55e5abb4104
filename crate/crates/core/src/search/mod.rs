//! 1:N identification against a memory-resident gallery.

mod metrics;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{match_templates, GraphMatchParams};
use crate::template::{self, TextureTemplate, Variant};

pub use metrics::{auc, cmc, latency_stats, rank_of, roc_curve, CmcCurve, LatencyStats, RocPoint};

/// Templates of one subject (or one query), keyed by image variant.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub id: String,
    pub templates: BTreeMap<Variant, TextureTemplate>,
}

impl TemplateSet {
    pub fn single(id: impl Into<String>, t: TextureTemplate) -> Self {
        Self { id: id.into(), templates: BTreeMap::from([(t.variant, t)]) }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Gallery {
    entries: Vec<TemplateSet>,
    descriptor_len: Option<usize>,
}

impl Gallery {
    pub fn new(entries: Vec<TemplateSet>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut descriptor_len = None;
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Gallery(format!("duplicate subject id {:?}", e.id)));
            }
            for t in e.templates.values() {
                match descriptor_len {
                    None => descriptor_len = Some(t.descriptor_len),
                    Some(l) if l != t.descriptor_len => {
                        return Err(Error::Gallery(format!(
                            "subject {:?} has descriptor length {}, gallery uses {l}",
                            e.id, t.descriptor_len
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Self { entries, descriptor_len })
    }

    /// Loads `subject_id,variant,template_path` rows (with header); relative
    /// paths are resolved against the manifest's directory.
    pub fn from_manifest(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            subject_id: String,
            variant: String,
            template_path: String,
        }
        let path = path.as_ref();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let file = std::fs::File::open(path)?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let mut by_id: BTreeMap<String, TemplateSet> = BTreeMap::new();
        let mut order = Vec::new();
        for (no, row) in reader.deserialize::<Row>().enumerate() {
            let line = no + 2;
            let row = row.map_err(|e| Error::Gallery(format!("manifest line {line}: {e}")))?;
            let variant: Variant = row.variant.parse().map_err(|e| Error::Gallery(format!("manifest line {line}: {e}")))?;
            let bytes = std::fs::read(base.join(&row.template_path))?;
            let t = template::deserialize(&bytes)?;
            if t.variant != variant {
                return Err(Error::Gallery(format!(
                    "manifest line {line}: {} holds variant {}, manifest says {variant}",
                    row.template_path, t.variant
                )));
            }
            let id = row.subject_id;
            let set = by_id.entry(id.clone()).or_insert_with(|| {
                order.push(id.clone());
                TemplateSet { id: id.clone(), templates: BTreeMap::new() }
            });
            if set.templates.insert(variant, t).is_some() {
                return Err(Error::Gallery(format!("manifest line {line}: subject {id} lists variant {variant} twice")));
            }
        }
        Self::new(order.iter().map(|id| by_id.remove(id).expect("inserted")).collect())
    }

    pub fn entries(&self) -> &[TemplateSet] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn descriptor_len(&self) -> Option<usize> {
        self.descriptor_len
    }
}

/// Per-variant fusion weights; absent variants default to 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights(pub BTreeMap<Variant, f64>);

impl FusionWeights {
    pub fn weight(&self, v: Variant) -> f64 {
        self.0.get(&v).copied().unwrap_or(1.0)
    }
}

/// Weighted mean over the variants that produced a score.
pub fn fuse_scores(scores: &[(Variant, f64)], weights: &FusionWeights) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("scores to fuse"));
    }
    let total: f64 = scores.iter().map(|&(v, _)| weights.weight(v)).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParams("fusion weights of the present variants sum to zero".into()));
    }
    Ok(scores.iter().map(|&(v, s)| weights.weight(v) * s).sum::<f64>() / total)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub graph: GraphMatchParams,
    pub weights: FusionWeights,
    /// Keep only the best `top_k` candidates in the result.
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub subject_id: String,
    pub fused_score: f64,
    pub variant_scores: BTreeMap<Variant, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query_id: String,
    /// Sorted by fused score, descending; ties by subject id.
    pub candidates: Vec<Candidate>,
    pub latency: LatencyStats,
}

/// Matches every shared variant of `query` against each gallery subject,
/// fuses and ranks. Subjects sharing no variant with the query score 0.
/// Runs on the current rayon pool.
pub fn search(query: &TemplateSet, gallery: &Gallery, params: &SearchParams) -> Result<SearchResult> {
    params.graph.validate()?;
    if let (Some(l), Some(q)) = (gallery.descriptor_len(), query.templates.values().next()) {
        if query.templates.values().any(|t| t.descriptor_len != l) {
            return Err(Error::DescriptorLenMismatch { latent: q.descriptor_len, reference: l });
        }
    }
    let per_subject = gallery
        .entries()
        .par_iter()
        .map(|entry| {
            let mut scores = Vec::new();
            let mut times = Vec::new();
            for (v, lat) in &query.templates {
                if let Some(reference) = entry.templates.get(v) {
                    let t = Instant::now();
                    let r = match_templates(lat, reference, &params.graph)?;
                    times.push(t.elapsed().as_secs_f64() * 1e3);
                    scores.push((*v, r.score));
                }
            }
            let fused = if scores.is_empty() { 0.0 } else { fuse_scores(&scores, &params.weights)? };
            let candidate =
                Candidate { subject_id: entry.id.clone(), fused_score: fused, variant_scores: scores.into_iter().collect() };
            Ok((candidate, times))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut candidates = Vec::with_capacity(per_subject.len());
    for (c, t) in per_subject {
        candidates.push(c);
        times.extend(t);
    }
    rank_candidates(&mut candidates);
    if let Some(k) = params.top_k {
        candidates.truncate(k);
    }
    Ok(SearchResult { query_id: query.id.clone(), candidates, latency: latency_stats(&times) })
}

/// Fused score descending, then subject id ascending.
pub fn rank_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| b.fused_score.total_cmp(&a.fused_score).then_with(|| a.subject_id.cmp(&b.subject_id)));
}
