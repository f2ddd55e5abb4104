use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use texmatch_core::descriptor::{self, DescriptorMatrix};
use texmatch_core::matcher::Correspondence;
use texmatch_core::search::{self, CmcCurve, LatencyStats, RocPoint, SearchResult};
use texmatch_core::synth::{self, PlantedPair};
use texmatch_core::{
    match_templates, ridgeflow, template, ExtractionConfig, Gallery, GrayImage, RoiMask, SearchParams, StageTimings, SynthConfig,
    TextureTemplate, Variant,
};

use crate::io::{emit, load_queries, read_bytes, read_template, read_text, require_file, write_file, write_template};
use crate::params::ParamsFile;
use crate::{CliError, CliResult, ExtractArgs, Format, GlobalOpts, KindArg, MatchArgs};
use crate::{BenchArgs, CmcArgs, RocArgs, SearchArgs, SynthArgs};

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value).map_err(CliError::contract)?;
    s.push(b'\n');
    Ok(s)
}

fn read_image(path: &Path) -> CliResult<GrayImage> {
    GrayImage::read_pgm(path).map_err(|e| CliError::core(path, e))
}

// ------------------------------------------------------------------ extract

pub fn extract(g: &GlobalOpts, params: &ParamsFile, a: &ExtractArgs) -> CliResult<()> {
    let variant: Variant = a.variant.parse().map_err(|e: texmatch_core::Error| CliError::Parse(e.to_string()))?;
    let mut cfg = ExtractionConfig { dual: a.kind == KindArg::Latent, ..params.extraction };
    if let Some(s) = a.stride {
        cfg.stride = s;
    }
    if let Some(len) = a.desc_len {
        if len % 3 != 0 || descriptor::check_patch_len(len / 3).is_err() {
            return Err(CliError::Contract(format!("--desc-len {len} not in {:?}", descriptor::DESCRIPTOR_LENGTHS)));
        }
        cfg.patch_len = len / 3;
    }
    cfg.validate().map_err(CliError::contract)?;
    // check every input before doing any work
    require_file(&a.image)?;
    for p in a.mask.iter().chain(&a.import_descriptors) {
        require_file(p)?;
    }

    let img = read_image(&a.image)?;
    let field = ridgeflow::estimate_orientation_field(&img).map_err(|e| CliError::core(&a.image, e))?;
    let roi = match &a.mask {
        Some(p) => {
            let mask = read_image(p)?;
            if (mask.width(), mask.height()) != (img.width(), img.height()) {
                return Err(CliError::Contract(format!(
                    "mask is {}x{}, image is {}x{}",
                    mask.width(),
                    mask.height(),
                    img.width(),
                    img.height()
                )));
            }
            RoiMask::from_mask_image(&mask)
        }
        None => ridgeflow::segment_roi_default(&img, &field).map_err(|e| CliError::core(&a.image, e))?,
    };
    let mut t = template::build_template(&img, &roi, &field, &cfg, variant).map_err(|e| CliError::core(&a.image, e))?;
    if let Some(p) = &a.import_descriptors {
        let m = DescriptorMatrix::decode(&read_bytes(p)?).map_err(|e| CliError::Malformed { path: p.clone(), msg: e.to_string() })?;
        t = descriptor::import_descriptors(&t, &m).map_err(|e| CliError::core(p, e))?;
    }
    if let Some(p) = &a.field_csv {
        write_file(p, ridgeflow::field_to_csv(&field, &roi).as_bytes())?;
    }
    let bytes = template::serialize(&t).map_err(|e| CliError::core(&a.image, e))?;
    emit(g.out.as_deref(), &bytes)?;
    eprintln!("{} minutiae, descriptor length {}", t.len(), t.descriptor_len);
    Ok(())
}

// ------------------------------------------------------------------ match

#[derive(Debug, Serialize)]
struct MatchReport<'a> {
    score: f64,
    n_final: usize,
    correspondences: &'a [Correspondence],
    timings: StageTimings,
}

pub fn match_pair(g: &GlobalOpts, params: &ParamsFile, a: &MatchArgs) -> CliResult<()> {
    require_file(&a.latent)?;
    require_file(&a.reference)?;
    let lat = read_template(&a.latent)?;
    let reference = read_template(&a.reference)?;
    let res = match_templates(&lat, &reference, &params.graph).map_err(CliError::contract)?;
    let out = if a.json {
        to_json(&MatchReport {
            score: res.score,
            n_final: res.correspondences.len(),
            correspondences: &res.correspondences,
            timings: res.timings,
        })?
    } else {
        format!("score {:.6} n_final {}\n", res.score, res.correspondences.len()).into_bytes()
    };
    emit(g.out.as_deref(), &out)
}

// ------------------------------------------------------------------ search

pub fn search(g: &GlobalOpts, params: &ParamsFile, a: &SearchArgs) -> CliResult<()> {
    require_file(&a.gallery)?;
    let gallery = Gallery::from_manifest(&a.gallery).map_err(|e| CliError::core(&a.gallery, e))?;
    let queries = load_queries(&a.query_dir)?;
    let sp = SearchParams { graph: params.graph.clone(), weights: params.weights(), top_k: a.topk };
    let mut results = Vec::with_capacity(queries.len());
    for q in &queries {
        results.push(search::search(q, &gallery, &sp).map_err(CliError::contract)?);
    }
    let comparisons: usize = results.iter().map(|r| r.latency.comparisons).sum();
    eprintln!("{} queries against {} subjects, {comparisons} comparisons", results.len(), gallery.len());
    emit(g.out.as_deref(), &to_json(&results)?)
}

// ------------------------------------------------------------------ cmc

#[derive(Debug, Deserialize)]
struct MateRow {
    query_id: String,
    subject_id: String,
}

pub fn read_mates(path: &Path) -> CliResult<HashMap<String, String>> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut mates = HashMap::new();
    for row in rdr.deserialize::<MateRow>() {
        let row = row.map_err(|e| CliError::Malformed { path: path.into(), msg: e.to_string() })?;
        if mates.insert(row.query_id.clone(), row.subject_id).is_some() {
            return Err(CliError::Malformed { path: path.into(), msg: format!("query {} listed twice", row.query_id) });
        }
    }
    Ok(mates)
}

pub fn cmc(g: &GlobalOpts, a: &CmcArgs) -> CliResult<()> {
    require_file(&a.results)?;
    require_file(&a.mates)?;
    let results: Vec<SearchResult> = serde_json::from_str(&read_text(&a.results)?)
        .map_err(|e| CliError::Malformed { path: a.results.clone(), msg: e.to_string() })?;
    let mates = read_mates(&a.mates)?;
    let curve: CmcCurve = search::cmc(&results, &mates, a.max_rank).map_err(CliError::contract)?;
    for q in &curve.missing_mates {
        eprintln!("warning: mate of {q} ({}) is not in its ranked list", mates[q]);
    }
    eprintln!("rank-1 {:.4}, rank-{} {:.4} over {} queries", curve.rank(1), a.max_rank, curve.rank(a.max_rank), curve.queries);
    let out = match a.format {
        Format::Csv => curve.to_csv().into_bytes(),
        Format::Json => to_json(&curve)?,
    };
    emit(g.out.as_deref(), &out)
}

// ------------------------------------------------------------------ roc

#[derive(Debug, Deserialize)]
struct ScoreRow {
    score: f64,
    genuine: u8,
}

fn labelled_scores(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let (mut gen, mut imp) = (Vec::new(), Vec::new());
    for row in rdr.deserialize::<ScoreRow>() {
        let row = row.map_err(|e| CliError::Malformed { path: path.into(), msg: e.to_string() })?;
        match row.genuine {
            1 => gen.push(row.score),
            0 => imp.push(row.score),
            other => return Err(CliError::Malformed { path: path.into(), msg: format!("genuine must be 0 or 1, got {other}") }),
        }
    }
    Ok((gen, imp))
}

pub fn load_synth_config(path: Option<&Path>, seed: Option<u64>) -> CliResult<SynthConfig> {
    let mut cfg = match path {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| CliError::Malformed { path: p.into(), msg: e.to_string() })?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(CliError::contract)?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct RocReport {
    genuine: usize,
    impostor: usize,
    genuine_mean: f64,
    impostor_mean: f64,
    auc: f64,
    points: Vec<RocPoint>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub fn roc(g: &GlobalOpts, _params: &ParamsFile, a: &RocArgs) -> CliResult<()> {
    let (gen, imp) = match (&a.scores, &a.synth) {
        (Some(p), _) => {
            require_file(p)?;
            labelled_scores(p)?
        }
        (None, cfg_path) => {
            let cfg = load_synth_config(cfg_path.as_deref(), g.seed)?;
            let per_subject = (0..a.count)
                .into_par_iter()
                .map(|i| {
                    let (img, r) = synth::generate_reference(&cfg, i)?;
                    Ok(synth::planted_descriptor_scores(&synth::derive_latent(&img, &r, &cfg, i)?))
                })
                .collect::<texmatch_core::Result<Vec<_>>>()
                .map_err(CliError::contract)?;
            per_subject.into_iter().fold((Vec::new(), Vec::new()), |(mut g, mut i), (a, b)| {
                g.extend(a);
                i.extend(b);
                (g, i)
            })
        }
    };
    let points = search::roc_curve(&gen, &imp).map_err(CliError::contract)?;
    let report = RocReport {
        genuine: gen.len(),
        impostor: imp.len(),
        genuine_mean: mean(&gen),
        impostor_mean: mean(&imp),
        auc: search::auc(&points),
        points,
    };
    eprintln!(
        "AUC {:.4}; genuine mean {:.4} ({}), impostor mean {:.4} ({})",
        report.auc, report.genuine_mean, report.genuine, report.impostor_mean, report.impostor
    );
    let out = match a.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut s = String::from("threshold,tpr,fpr\n");
            for p in &report.points {
                s.push_str(&format!("{},{},{}\n", p.threshold, p.tpr, p.fpr));
            }
            s.into_bytes()
        }
    };
    emit(g.out.as_deref(), &out)
}

// ------------------------------------------------------------------ synth

#[derive(Debug, Serialize)]
struct SynthSummary {
    count: u64,
    seed: u64,
    reference_points: usize,
    latent_points: usize,
    planted: usize,
    empty_latents: Vec<String>,
}

fn write_pair(dir: &Path, i: u64, img: &GrayImage, pair: &PlantedPair, images: bool) -> CliResult<()> {
    let (sid, qid) = (subject_id(i), query_name(i));
    write_template(&dir.join("gallery").join(format!("{sid}.ftt")), &pair.reference)?;
    write_template(&dir.join("queries").join(format!("{qid}.ftt")), &pair.latent)?;
    let mut truth = Vec::new();
    synth::write_truth_csv(&pair.truth, &mut truth).map_err(|source| CliError::Io { path: dir.into(), source })?;
    write_file(&dir.join("truth").join(format!("{qid}.csv")), &truth)?;
    if images {
        let p = dir.join("gallery").join(format!("{sid}.pgm"));
        img.write_pgm(&p).map_err(|e| CliError::core(&p, e))?;
        let p = dir.join("queries").join(format!("{qid}.pgm"));
        synth::render_latent_image(img, pair).and_then(|l| l.write_pgm(&p)).map_err(|e| CliError::core(&p, e))?;
    }
    Ok(())
}

fn subject_id(i: u64) -> String {
    format!("s{i:05}")
}

fn query_name(i: u64) -> String {
    format!("q{i:05}")
}

pub fn synth(g: &GlobalOpts, _params: &ParamsFile, a: &SynthArgs) -> CliResult<()> {
    if let Some(p) = &a.config {
        require_file(p)?;
    }
    let cfg = load_synth_config(a.config.as_deref(), g.seed)?;
    if a.count == 0 {
        return Err(CliError::Contract("--count must be at least 1".into()));
    }
    let sizes = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let (img, r) = synth::generate_reference(&cfg, i).map_err(CliError::contract)?;
            let pair = synth::derive_latent(&img, &r, &cfg, i).map_err(CliError::contract)?;
            write_pair(&a.out_dir, i, &img, &pair, !a.no_images)?;
            Ok((pair.reference.len(), pair.latent.len(), pair.truth.len()))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut manifest = String::from("subject_id,variant,template_path\n");
    let mut mates = String::from("query_id,subject_id\n");
    for i in 0..a.count {
        manifest.push_str(&format!("{},{},gallery/{}.ftt\n", subject_id(i), Variant::Raw, subject_id(i)));
        mates.push_str(&format!("{},{}\n", query_name(i), subject_id(i)));
    }
    write_file(&a.out_dir.join("manifest.csv"), manifest.as_bytes())?;
    write_file(&a.out_dir.join("mates.csv"), mates.as_bytes())?;
    let summary = SynthSummary {
        count: a.count,
        seed: cfg.seed,
        reference_points: sizes.iter().map(|s| s.0).sum(),
        latent_points: sizes.iter().map(|s| s.1).sum(),
        planted: sizes.iter().map(|s| s.2).sum(),
        empty_latents: (0..a.count).filter(|&i| sizes[i as usize].1 == 0).map(query_name).collect(),
    };
    emit(g.out.as_deref(), &to_json(&summary)?)
}

// ------------------------------------------------------------------ bench

#[derive(Debug, Serialize)]
struct PairReport {
    latent: String,
    reference: String,
    latent_points: usize,
    reference_points: usize,
    score: f64,
    n_final: usize,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    threads: usize,
    latency: LatencyStats,
    /// Mean per-stage time, milliseconds.
    stages: StageTimings,
    pairs: Vec<PairReport>,
}

/// Templates of the latency target size: 240 latent points (duals included)
/// against 600 reference points at descriptor length 192.
pub fn bench_templates(seed: u64) -> CliResult<(Vec<(String, TextureTemplate)>, Vec<(String, TextureTemplate)>)> {
    let cfg = SynthConfig { seed, width: 896, height: 864, crop_fraction: 0.2, ..Default::default() };
    let (img, r) = synth::generate_reference(&cfg, 0).map_err(CliError::contract)?;
    let pair = synth::derive_latent(&img, &r, &cfg, 0).map_err(CliError::contract)?;
    let (_, other) = synth::generate_reference(&cfg, 1).map_err(CliError::contract)?;
    Ok((vec![("synthetic-latent".into(), pair.latent)], vec![("synthetic-mate".into(), r), ("synthetic-other".into(), other)]))
}

pub fn bench(g: &GlobalOpts, params: &ParamsFile, a: &BenchArgs) -> CliResult<()> {
    if a.comparisons == 0 {
        return Err(CliError::Contract("--comparisons must be at least 1".into()));
    }
    for p in a.latent.iter().chain(&a.reference) {
        require_file(p)?;
    }
    let load = |paths: &[std::path::PathBuf]| -> CliResult<Vec<(String, TextureTemplate)>> {
        paths.iter().map(|p| Ok((p.display().to_string(), read_template(p)?))).collect()
    };
    let (lats, refs) = match (a.latent.is_empty(), a.reference.is_empty()) {
        (true, true) => bench_templates(g.seed.unwrap_or(1))?,
        (false, false) => (load(&a.latent)?, load(&a.reference)?),
        _ => return Err(CliError::Contract("give both --latent and --ref, or neither for synthetic templates".into())),
    };
    let pairs: Vec<(usize, usize)> = (0..lats.len()).flat_map(|i| (0..refs.len()).map(move |j| (i, j))).collect();

    // comparisons run on the calling thread regardless of --threads
    let mut reports: Vec<Option<PairReport>> = pairs.iter().map(|_| None).collect();
    let mut times = Vec::with_capacity(a.comparisons);
    let mut stages = StageTimings::default();
    for k in 0..a.comparisons {
        let slot = k % pairs.len();
        let (i, j) = pairs[slot];
        let t = Instant::now();
        let res = match_templates(&lats[i].1, &refs[j].1, &params.graph).map_err(CliError::contract)?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        stages.sim_ms += res.timings.sim_ms;
        stages.norm_ms += res.timings.norm_ms;
        stages.topn_ms += res.timings.topn_ms;
        stages.graph_ms += res.timings.graph_ms;
        reports[slot].get_or_insert_with(|| PairReport {
            latent: lats[i].0.clone(),
            reference: refs[j].0.clone(),
            latent_points: lats[i].1.len(),
            reference_points: refs[j].1.len(),
            score: res.score,
            n_final: res.correspondences.len(),
        });
    }
    let n = a.comparisons as f64;
    let stages = StageTimings {
        sim_ms: stages.sim_ms / n,
        norm_ms: stages.norm_ms / n,
        topn_ms: stages.topn_ms / n,
        graph_ms: stages.graph_ms / n,
    };
    let latency = search::latency_stats(&times);
    eprintln!("mean {:.4} ms, p50 {:.4} ms, p95 {:.4} ms over {} comparisons", latency.mean_ms, latency.p50_ms, latency.p95_ms, latency.comparisons);
    let report = BenchReport { threads: 1, latency, stages, pairs: reports.into_iter().flatten().collect() };
    emit(g.out.as_deref(), &to_json(&report)?)
}
