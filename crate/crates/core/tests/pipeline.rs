use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use levelscore::config::PipelineConfig;
use levelscore::pipeline::{run_pipeline, run_stage, AnalyzeKind, Stage};
use levelscore::Error;

fn small_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        out: out.to_path_buf(),
        from: 2000,
        to: 2000,
        window: 2,
        dim: 10,
        synth_papers: 1500,
        sample_fraction: 0.1,
        n_perm: 500,
        sample_pairs: 2000,
        null_replicates: 3,
        threads: 1,
        seed: 11,
        ..PipelineConfig::default()
    }
}

fn read_col(path: &Path, col: usize) -> HashMap<String, f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[col].parse().unwrap())
        })
        .collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 { xs[n / 2] } else { (xs[n / 2 - 1] + xs[n / 2]) / 2.0 }
}

#[test]
fn synthetic_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    run_stage(&cfg, Stage::Synth).unwrap();
    run_pipeline(&cfg).unwrap();
    let out = dir.path();

    for stage in [Stage::Ingest, Stage::Cooccur, Stage::Embed, Stage::Score] {
        assert!(out.join(stage.dir()).join("manifest.json").is_file(), "{}", stage.name());
    }
    for k in AnalyzeKind::ALL {
        assert!(out.join(Stage::Analyze(k).dir()).join("manifest.json").is_file(), "{}", k.name());
    }
    let leftovers: Vec<PathBuf> = walk(out).into_iter().filter(|p| p.to_string_lossy().contains(".partial")).collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");

    // Both paper scores rank papers nearly identically.
    let score = out.join(Stage::Score.dir());
    let ls = read_col(&score.join("paper_scores.tsv"), 2);
    let alt = read_col(&score.join("paper_scores_alt.tsv"), 2);
    let common: Vec<&String> = ls.keys().filter(|k| alt.contains_key(*k)).collect();
    assert!(common.len() > 100);
    let a: Vec<f64> = common.iter().map(|k| ls[*k]).collect();
    let b: Vec<f64> = common.iter().map(|k| alt[*k]).collect();
    let rho = pearson(&ranks(&a), &ranks(&b));
    assert!(rho > 0.9, "rank correlation {rho}");

    // Planted applied-only papers score above planted basic-only papers.
    let truth: HashMap<String, String> = fs::read_to_string(out.join("input/truth_papers.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (p, m) = l.split_once('\t').unwrap();
            (p.to_string(), m.to_string())
        })
        .collect();
    let group = |m: &str| median(ls.iter().filter(|(k, _)| truth[*k] == m).map(|(_, v)| *v).collect());
    assert!(group("applied_only") > 0.0 && group("basic_only") < 0.0);
    assert!(group("applied_only") > group("mixed") && group("mixed") > group("basic_only"));
}

fn walk(p: &Path) -> Vec<PathBuf> {
    let mut v = Vec::new();
    for e in fs::read_dir(p).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            v.extend(walk(&path));
        }
        v.push(path);
    }
    v
}

#[test]
fn stage_out_of_order_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let err = run_stage(&cfg, Stage::Embed).unwrap_err();
    assert!(matches!(err, Error::MissingStageInput { ref producer, .. } if producer == "ingest"), "{err}");
    run_stage(&cfg, Stage::Synth).unwrap();
    run_stage(&cfg, Stage::Ingest).unwrap();
    let err = run_stage(&cfg, Stage::Embed).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(matches!(err, Error::MissingStageInput { ref producer, .. } if producer == "cooccur"), "{err}");
    assert!(!dir.path().join(Stage::Embed.dir()).exists());
}

#[test]
fn missing_configured_input_is_io_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.mesh_tree = Some(dir.path().join("no_such_tree.tsv"));
    match run_stage(&cfg, Stage::Ingest).unwrap_err() {
        Error::Io { source, .. } => assert_eq!(source.kind(), std::io::ErrorKind::NotFound),
        e => panic!("unexpected {e}"),
    }
}
