use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn texmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texmatch")).args(args).output().expect("spawn texmatch")
}

fn ok(args: &[&str]) -> Output {
    let out = texmatch(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic corpus shared by several tests.
fn corpus(dir: &Path, count: &str) {
    let cfg = dir.join("synth.toml");
    fs::write(&cfg, "seed = 3\nwidth = 288\nheight = 288\n").unwrap();
    ok(&["synth", "--config", p(&cfg), "--out-dir", p(dir), "--count", count]);
}

#[test]
fn synth_search_cmc_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), "4");
    for f in ["manifest.csv", "mates.csv", "gallery/s00000.ftt", "gallery/s00000.pgm", "queries/q00003.ftt", "truth/q00002.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let truth = fs::read_to_string(dir.path().join("truth/q00000.csv")).unwrap();
    assert!(truth.starts_with("latent_idx,ref_idx\n"));

    let results = dir.path().join("results.json");
    let manifest = dir.path().join("manifest.csv");
    let queries = dir.path().join("queries");
    ok(&["search", "--query-dir", p(&queries), "--gallery", p(&manifest), "--topk", "3", "--threads", "1", "--out", p(&results)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&results).unwrap()).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 4);
    for r in list {
        let q = r["query_id"].as_str().unwrap();
        assert_eq!(r["candidates"].as_array().unwrap().len(), 3);
        assert_eq!(r["candidates"][0]["subject_id"].as_str().unwrap(), q.replace('q', "s"));
    }

    let cmc = dir.path().join("cmc.csv");
    ok(&["cmc", "--results", p(&results), "--mates", p(&dir.path().join("mates.csv")), "--max-rank", "3", "--out", p(&cmc)]);
    assert_eq!(fs::read_to_string(&cmc).unwrap(), "rank,rate\n1,1\n2,1\n3,1\n");
}

#[test]
fn search_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), "3");
    let run = |threads: &str| {
        let out = ok(&[
            "search",
            "--query-dir",
            p(&dir.path().join("queries")),
            "--gallery",
            p(&dir.path().join("manifest.csv")),
            "--threads",
            threads,
        ]);
        let mut v = json(&out);
        for r in v.as_array_mut().unwrap() {
            r.as_object_mut().unwrap().remove("latency");
        }
        v
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn extract_then_match_self() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), "1");
    let img = dir.path().join("gallery/s00000.pgm");
    let lat = dir.path().join("lat.ftt");
    let reference = dir.path().join("ref.ftt");
    let field = dir.path().join("field.csv");
    let out = ok(&["extract", "--image", p(&img), "--kind", "latent", "--variant", "e1", "--desc-len", "96", "--field-csv", p(&field), "--out", p(&lat)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("descriptor length 96"));
    assert!(fs::read_to_string(&field).unwrap().starts_with("row,col,angle,coherence,roi\n"));
    ok(&["extract", "--image", p(&img), "--kind", "reference", "--desc-len", "96", "--out", p(&reference)]);

    let v = json(&ok(&["match", "--latent", p(&lat), "--ref", p(&reference), "--json"]));
    let n_ref = fs::read(&reference).unwrap();
    let n_ref = u32::from_le_bytes(n_ref[9..13].try_into().unwrap()) as u64;
    assert_eq!(v["n_final"].as_u64().unwrap(), n_ref);
    assert!((v["score"].as_f64().unwrap() - n_ref as f64).abs() < 1e-3);
    for k in ["sim_ms", "norm_ms", "topn_ms", "graph_ms"] {
        assert!(v["timings"][k].as_f64().is_some());
    }
    let line = String::from_utf8(ok(&["match", "--latent", p(&lat), "--ref", p(&reference)]).stdout).unwrap();
    assert!(line.starts_with("score "));

    // descriptor length mismatch is a contract violation
    let other = dir.path().join("other.ftt");
    ok(&["extract", "--image", p(&img), "--kind", "reference", "--desc-len", "192", "--out", p(&other)]);
    assert_eq!(texmatch(&["match", "--latent", p(&lat), "--ref", p(&other)]).status.code(), Some(4));
}

#[test]
fn params_file_changes_matching() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), "1");
    let lat = dir.path().join("queries/q00000.ftt");
    let reference = dir.path().join("gallery/s00000.ftt");
    let params = dir.path().join("params.toml");
    fs::write(&params, "[graph]\ntop_n = 3\n").unwrap();
    let v = json(&ok(&["match", "--latent", p(&lat), "--ref", p(&reference), "--json", "--params", p(&params)]));
    assert!(v["n_final"].as_u64().unwrap() <= 3);
    fs::write(&params, "[graph]\ntop_n = 0\n").unwrap();
    assert_eq!(texmatch(&["match", "--latent", p(&lat), "--ref", p(&reference), "--params", p(&params)]).status.code(), Some(4));
    fs::write(&params, "[graph\n").unwrap();
    assert_eq!(texmatch(&["match", "--latent", p(&lat), "--ref", p(&reference), "--params", p(&params)]).status.code(), Some(5));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(texmatch(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(texmatch(&["match", "--latent", "x.ftt"]).status.code(), Some(2));
    let missing = dir.path().join("missing.ftt");
    assert_eq!(texmatch(&["match", "--latent", p(&missing), "--ref", p(&missing)]).status.code(), Some(3));
    let junk = dir.path().join("junk.ftt");
    fs::write(&junk, b"FTX1 not a template").unwrap();
    assert_eq!(texmatch(&["match", "--latent", p(&junk), "--ref", p(&junk)]).status.code(), Some(5));
    let img = dir.path().join("bad.pgm");
    fs::write(&img, b"P2\n1 1\n255\n0\n").unwrap();
    assert_eq!(texmatch(&["extract", "--image", p(&img), "--kind", "latent", "--out", p(&junk)]).status.code(), Some(5));
    assert_eq!(texmatch(&["extract", "--image", p(&img), "--kind", "latent", "--desc-len", "100"]).status.code(), Some(4));
    assert_eq!(texmatch(&["extract", "--image", p(&img), "--kind", "latent", "--variant", "zz"]).status.code(), Some(2));
}

#[test]
fn roc_from_scores_and_synth() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, "score,genuine\n0.9,1\n0.8,1\n0.1,0\n0.2,0\n").unwrap();
    let csv = String::from_utf8(ok(&["roc", "--scores", p(&scores)]).stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("threshold,tpr,fpr"));
    assert_eq!(csv.lines().last(), Some("0.1,1,1"));
    let v = json(&ok(&["roc", "--scores", p(&scores), "--format", "json"]));
    assert_eq!(v["auc"].as_f64(), Some(1.0));

    fs::write(&scores, "score,genuine\n0.9,1\n").unwrap();
    assert_eq!(texmatch(&["roc", "--scores", p(&scores)]).status.code(), Some(4));

    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, "width = 256\nheight = 256\n").unwrap();
    let v = json(&ok(&["roc", "--synth", p(&cfg), "--count", "3", "--format", "json"]));
    let gap = v["genuine_mean"].as_f64().unwrap() - v["impostor_mean"].as_f64().unwrap();
    assert!(gap >= 0.5, "gap {gap}");
}

#[test]
fn cmc_reports_missing_mates() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("r.json");
    fs::write(
        &results,
        r#"[{"query_id":"q1","candidates":[{"subject_id":"a","fused_score":2.0,"variant_scores":{}},
            {"subject_id":"b","fused_score":1.0,"variant_scores":{}}],
            "latency":{"comparisons":2,"mean_ms":0.0,"p50_ms":0.0,"p95_ms":0.0,"total_ms":0.0}},
           {"query_id":"q2","candidates":[{"subject_id":"a","fused_score":2.0,"variant_scores":{}}],
            "latency":{"comparisons":1,"mean_ms":0.0,"p50_ms":0.0,"p95_ms":0.0,"total_ms":0.0}}]"#,
    )
    .unwrap();
    let mates = dir.path().join("m.csv");
    fs::write(&mates, "query_id,subject_id\nq1,b\nq2,zz\n").unwrap();
    let out = ok(&["cmc", "--results", p(&results), "--mates", p(&mates), "--max-rank", "2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "rank,rate\n1,0\n2,0.5\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("q2"));
    fs::write(&mates, "query_id,subject_id\nq1,b\n").unwrap();
    assert_eq!(texmatch(&["cmc", "--results", p(&results), "--mates", p(&mates)]).status.code(), Some(4));
}

#[test]
fn bench_scores_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path(), "2");
    let lat = dir.path().join("queries/q00000.ftt");
    let refs = [dir.path().join("gallery/s00000.ftt"), dir.path().join("gallery/s00001.ftt")];
    let run = |threads: &str| {
        json(&ok(&["bench", "--latent", p(&lat), "--ref", p(&refs[0]), p(&refs[1]), "--comparisons", "20", "--threads", threads]))
    };
    let (a, b) = (run("1"), run("2"));
    assert_eq!(a["pairs"], b["pairs"]);
    assert_eq!(a["latency"]["comparisons"].as_u64(), Some(20));
    assert_eq!(a["pairs"].as_array().unwrap().len(), 2);
    assert!(a["latency"]["mean_ms"].as_f64().unwrap() > 0.0);
    let missing = dir.path().join("nope.ftt");
    assert_eq!(texmatch(&["bench", "--latent", p(&missing), "--ref", p(&refs[0])]).status.code(), Some(3));
}
