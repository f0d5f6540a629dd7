//! File-based stages. Each stage reads the outputs of earlier stages from
//! `<out>/<stage>/`, writes into a scratch directory and renames it into
//! place only on success, together with a `manifest.json`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, PermTestRow};
use crate::axis::{self, ScoreTables, ScoredPaper, WindowScores};
use crate::citegraph;
use crate::config::PipelineConfig;
use crate::cooccur;
use crate::corpus::papers::{read_records, write_records};
use crate::corpus::{self, citations, Community, MeshVocabulary, PaperRecord, SynthSpec, TermMix};
use crate::embed::{self, window_seed};
use crate::error::{Error, Result};
use crate::numfmt::fmt9;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const LOSS_SAMPLE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyzeKind {
    Heatmap,
    Reach,
    Groups,
    Trials,
    Trajectory,
    Threshold,
    Similarity,
}

impl AnalyzeKind {
    pub const ALL: [AnalyzeKind; 7] = [
        AnalyzeKind::Heatmap,
        AnalyzeKind::Reach,
        AnalyzeKind::Groups,
        AnalyzeKind::Trials,
        AnalyzeKind::Trajectory,
        AnalyzeKind::Threshold,
        AnalyzeKind::Similarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyzeKind::Heatmap => "heatmap",
            AnalyzeKind::Reach => "reach",
            AnalyzeKind::Groups => "groups",
            AnalyzeKind::Trials => "trials",
            AnalyzeKind::Trajectory => "trajectory",
            AnalyzeKind::Threshold => "threshold",
            AnalyzeKind::Similarity => "similarity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Ingest,
    Cooccur,
    Embed,
    Score,
    Analyze(AnalyzeKind),
}

impl Stage {
    pub fn name(self) -> String {
        match self {
            Stage::Synth => "synth".into(),
            Stage::Ingest => "ingest".into(),
            Stage::Cooccur => "cooccur".into(),
            Stage::Embed => "embed".into(),
            Stage::Score => "score".into(),
            Stage::Analyze(k) => format!("analyze {}", k.name()),
        }
    }

    /// Output directory relative to the output root.
    pub fn dir(self) -> PathBuf {
        match self {
            Stage::Synth => PathBuf::from("input"),
            Stage::Ingest => PathBuf::from("ingest"),
            Stage::Cooccur => PathBuf::from("cooccur"),
            Stage::Embed => PathBuf::from("embed"),
            Stage::Score => PathBuf::from("score"),
            Stage::Analyze(k) => Path::new("analyze").join(k.name()),
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn config_digest(cfg: &PipelineConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_text().as_bytes()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    stage: String,
    version: &'a str,
    config_sha256: String,
    seed: u64,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

/// Scratch directory for one stage run; removed on drop unless committed.
struct StageRun<'a> {
    cfg: &'a PipelineConfig,
    stage: Stage,
    tmp: PathBuf,
    target: PathBuf,
    inputs: BTreeMap<String, String>,
    committed: bool,
}

impl<'a> StageRun<'a> {
    fn begin(cfg: &'a PipelineConfig, stage: Stage) -> Result<Self> {
        let target = cfg.out.join(stage.dir());
        let parent = target.parent().unwrap_or(Path::new(".")).to_path_buf();
        let leaf = target.file_name().unwrap().to_string_lossy().into_owned();
        let tmp = parent.join(format!(".{leaf}.partial"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        info!("running {}", stage.name());
        Ok(StageRun {
            cfg,
            stage,
            tmp,
            target,
            inputs: BTreeMap::new(),
            committed: false,
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.tmp.join(name)
    }

    fn label(&self, path: &Path) -> String {
        path.strip_prefix(&self.cfg.out)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    /// Checks that `path` exists and records its digest.
    fn input(&mut self, path: &Path, producer: &str) -> Result<PathBuf> {
        self.input_from(path, Some(producer))
    }

    /// Like `input`, but a user-supplied file with no producing stage
    /// surfaces as a plain I/O error.
    fn input_from(&mut self, path: &Path, producer: Option<&str>) -> Result<PathBuf> {
        if !path.is_file() {
            return Err(match producer {
                Some(p) => Error::MissingStageInput {
                    path: path.to_path_buf(),
                    producer: p.to_string(),
                },
                None => Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)),
            });
        }
        let digest = sha256_file(path)?;
        self.inputs.insert(self.label(path), digest);
        Ok(path.to_path_buf())
    }

    fn commit(mut self) -> Result<PathBuf> {
        let mut outputs = BTreeMap::new();
        let mut names: Vec<_> = fs::read_dir(&self.tmp)
            .map_err(|e| Error::io(&self.tmp, e))?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(&self.tmp, e))?;
        names.sort();
        for name in names {
            outputs.insert(name.clone(), sha256_file(&self.tmp.join(&name))?);
        }
        let manifest = Manifest {
            stage: self.stage.name(),
            version: VERSION,
            config_sha256: config_digest(self.cfg),
            seed: self.cfg.seed,
            inputs: std::mem::take(&mut self.inputs),
            outputs,
        };
        let path = self.tmp.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        }
        fs::rename(&self.tmp, &self.target).map_err(|e| Error::io(&self.target, e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for StageRun<'_> {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn stage_file(cfg: &PipelineConfig, stage: Stage, name: &str) -> PathBuf {
    cfg.out.join(stage.dir()).join(name)
}

fn input_path(cfg: &PipelineConfig, configured: &Option<PathBuf>, default: &str) -> (PathBuf, Option<&'static str>) {
    match configured {
        Some(p) => (p.clone(), None),
        None => (cfg.input_dir().join(default), Some("synth")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<PathBuf> {
    cfg.validate()?;
    match stage {
        Stage::Synth => synth(cfg),
        Stage::Ingest => ingest(cfg),
        Stage::Cooccur => cooccur_stage(cfg),
        Stage::Embed => embed_stage(cfg),
        Stage::Score => score_stage(cfg),
        Stage::Analyze(k) => analyze(cfg, k),
    }
}

/// Every stage from `ingest` through all analyses.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<()> {
    for stage in [Stage::Ingest, Stage::Cooccur, Stage::Embed, Stage::Score] {
        run_stage(cfg, stage)?;
    }
    for k in AnalyzeKind::ALL {
        run_stage(cfg, Stage::Analyze(k))?;
    }
    Ok(())
}

fn synth(cfg: &PipelineConfig) -> Result<PathBuf> {
    let run = StageRun::begin(cfg, Stage::Synth)?;
    let spec = SynthSpec {
        papers: cfg.synth_papers,
        mixing: cfg.synth_mixing,
        year_from: cfg.from - cfg.window as i32 + 1,
        year_to: cfg.to,
        seed: cfg.seed,
        ..SynthSpec::default()
    };
    let corpus = corpus::generate_synthetic_corpus(&spec)?;
    corpus.write_inputs(
        &run.out("mesh_tree.tsv"),
        &run.out("papers.jsonl"),
        &run.out("citations.tsv"),
        &run.out("journal_fields.tsv"),
    )?;

    let path = run.out("truth_terms.tsv");
    let mut out = create(&path)?;
    for (t, c) in corpus.term_community.iter().enumerate() {
        let c = match c {
            Some(Community::Basic) => "basic",
            Some(Community::Applied) => "applied",
            None => continue,
        };
        writeln!(out, "{}\t{c}", corpus.vocab.name(t as u32)?).map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    let path = run.out("truth_papers.tsv");
    let mut out = create(&path)?;
    for (i, p) in corpus.raw_papers.iter().enumerate() {
        let mix = match corpus.paper_mix[i] {
            TermMix::BasicOnly => "basic_only",
            TermMix::Mixed => "mixed",
            TermMix::AppliedOnly => "applied_only",
        };
        writeln!(out, "{}\t{mix}", p.pmid).map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    run.commit()
}

#[derive(Serialize)]
struct IngestReport<'a> {
    vocabulary_terms: usize,
    duplicate_pairs_ignored: usize,
    papers: &'a corpus::IngestStats,
    citations: &'a corpus::CitationStats,
    journal_field_pairs: usize,
}

fn ingest(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut run = StageRun::begin(cfg, Stage::Ingest)?;
    let (mesh, p1) = input_path(cfg, &cfg.mesh_tree, "mesh_tree.tsv");
    let (papers, p2) = input_path(cfg, &cfg.papers, "papers.jsonl");
    let (cites, p3) = input_path(cfg, &cfg.citations, "citations.tsv");
    let (fields, p4) = input_path(cfg, &cfg.journal_fields, "journal_fields.tsv");
    let mesh = run.input_from(&mesh, p1)?;
    let papers = run.input_from(&papers, p2)?;
    let cites = run.input_from(&cites, p3)?;
    let fields = run.input_from(&fields, p4)?;

    let vocab = corpus::load_mesh_tree(&mesh, &cfg.roots)?;
    let first_year = cfg.from - cfg.window as i32 + 1;
    let (records, stats) = corpus::parse_papers(&papers, &vocab, first_year..=cfg.to)?;
    let known: HashSet<&str> = records.iter().map(|r| r.pmid.as_str()).collect();
    let (edges, cite_stats) = corpus::load_citations(&cites, &known)?;
    let jf = corpus::load_journal_fields(&fields)?;

    vocab.write_tsv(&run.out("vocabulary.tsv"))?;
    write_records(&run.out("papers.jsonl"), &records)?;
    citations::write_citations(&run.out("citations.tsv"), &edges)?;
    let path = run.out("journal_fields.tsv");
    let mut out = create(&path)?;
    for (j, f) in jf.iter() {
        writeln!(out, "{j}\t{f}").map_err(|e| Error::io(&path, e))?;
    }
    out.flush().map_err(|e| Error::io(&path, e))?;

    let report = IngestReport {
        vocabulary_terms: vocab.len(),
        duplicate_pairs_ignored: vocab.duplicates_ignored(),
        papers: &stats,
        citations: &cite_stats,
        journal_field_pairs: jf.len(),
    };
    let path = run.out("ingest_stats.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    info!(
        "ingested {} papers ({} rejected), {} citations",
        stats.accepted,
        stats.lines - stats.accepted,
        edges.len()
    );
    run.commit()
}

fn load_vocab(run: &mut StageRun) -> Result<MeshVocabulary> {
    let p = run.input(&stage_file(run.cfg, Stage::Ingest, "vocabulary.tsv"), "ingest")?;
    MeshVocabulary::read_tsv(&p)
}

fn load_records(run: &mut StageRun) -> Result<Vec<PaperRecord>> {
    let p = run.input(&stage_file(run.cfg, Stage::Ingest, "papers.jsonl"), "ingest")?;
    read_records(&p)
}

fn cooccur_stage(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut run = StageRun::begin(cfg, Stage::Cooccur)?;
    let records = load_records(&mut run)?;
    for t in cfg.from..=cfg.to {
        let m = cooccur::build_window_matrix(&records, t, cfg.window)?;
        cooccur::export_edge_list(&m, &run.out(&cooccur::matrix_file_name(t)))?;
    }
    run.commit()
}

fn embed_stage(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut run = StageRun::begin(cfg, Stage::Embed)?;
    let vocab = load_vocab(&mut run)?;
    let loss_path = run.out("loss.tsv");
    let mut loss_out = create(&loss_path)?;
    writeln!(loss_out, "window\tedges\tobjective").map_err(|e| Error::io(&loss_path, e))?;
    for t in cfg.from..=cfg.to {
        let edge_file = stage_file(cfg, Stage::Cooccur, &cooccur::matrix_file_name(t));
        let edge_file = run.input(&edge_file, "cooccur")?;
        run.input(&cooccur::nodes_sidecar_path(&edge_file), "cooccur")?;
        let m = cooccur::import_edge_list(&edge_file, t)?;
        if m.is_empty() {
            warn!("window {t}: no co-occurrences, skipping");
            continue;
        }
        let seed = window_seed(cfg.seed, t);
        let params = cfg.embedding_params(seed);
        let emb = embed::train_line(&m, &params)?;
        embed::write_embedding(&run.out(&embed::embedding_file_name(t)), &emb, &vocab, seed)?;
        let loss = embed::loss_estimate(&emb, &m, &params, LOSS_SAMPLE, seed)?;
        writeln!(loss_out, "{t}\t{}\t{}", m.len(), fmt9(loss)).map_err(|e| Error::io(&loss_path, e))?;
    }
    loss_out.flush().map_err(|e| Error::io(&loss_path, e))?;
    drop(loss_out);
    run.commit()
}

/// Embeddings written by `embed`, keyed by window end.
fn load_embeddings(run: &mut StageRun, vocab: &MeshVocabulary) -> Result<Vec<embed::TermEmbedding>> {
    let cfg = run.cfg;
    run.input(&stage_file(cfg, Stage::Embed, "manifest.json"), "embed")?;
    let mut out = Vec::new();
    for t in cfg.from..=cfg.to {
        let p = stage_file(cfg, Stage::Embed, &embed::embedding_file_name(t));
        if !p.is_file() {
            continue;
        }
        let p = run.input(&p, "embed")?;
        out.push(embed::read_embedding(&p, vocab, t)?.0);
    }
    Ok(out)
}

fn score_stage(cfg: &PipelineConfig) -> Result<PathBuf> {
    let mut run = StageRun::begin(cfg, Stage::Score)?;
    let vocab = load_vocab(&mut run)?;
    let records = load_records(&mut run)?;
    let mut tables = ScoreTables::default();
    for emb in load_embeddings(&mut run, &vocab)? {
        let t = emb.window_end;
        match WindowScores::new(emb, &vocab) {
            Ok(ws) => tables.insert(ws),
            Err(e @ (Error::Axis { .. } | Error::Numeric(_))) => warn!("window {t}: {e}; no scores"),
            Err(e) => return Err(e),
        }
    }
    if tables.years().next().is_none() {
        return Err(Error::Empty("no window produced an axis".into()));
    }
    let in_range: Vec<PaperRecord> = records
        .into_iter()
        .filter(|r| (cfg.from..=cfg.to).contains(&r.year))
        .collect();
    let scored = axis::score_papers(&in_range, &tables, &vocab);
    info!("scored {} of {} papers", scored.len(), in_range.len());
    axis::write_term_scores(&run.out("term_scores.tsv"), &tables, &vocab)?;
    axis::write_axes(&run.out("axes.tsv"), &tables)?;
    axis::write_paper_scores(&run.out("paper_scores.tsv"), &scored)?;

    let path = run.out("paper_scores_alt.tsv");
    let mut out = create(&path)?;
    for p in &in_range {
        let Some(w) = tables.window(p.year) else { continue };
        if let Some(s) = axis::score_paper_alt(p, &w.embedding, &w.axis)?.score() {
            writeln!(out, "{}\t{}\t{}", p.pmid, p.year, fmt9(s)).map_err(|e| Error::io(&path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    drop(out);
    run.commit()
}

fn load_scores(run: &mut StageRun) -> Result<Vec<ScoredPaper>> {
    let p = run.input(&stage_file(run.cfg, Stage::Score, "paper_scores.tsv"), "score")?;
    axis::read_paper_scores(&p)
}

fn load_graph(run: &mut StageRun) -> Result<citegraph::CitationGraph> {
    let scored = load_scores(run)?;
    let p = run.input(&stage_file(run.cfg, Stage::Ingest, "citations.tsv"), "ingest")?;
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(&p, n + 1, "expected `citing<TAB>cited`"))?;
        edges.push((a.to_string(), b.to_string()));
    }
    Ok(citegraph::build_graph(&scored, &edges))
}

fn analyze(cfg: &PipelineConfig, kind: AnalyzeKind) -> Result<PathBuf> {
    let mut run = StageRun::begin(cfg, Stage::Analyze(kind))?;
    match kind {
        AnalyzeKind::Heatmap => {
            let g = load_graph(&mut run)?;
            let bins = cfg.bins()?;
            citegraph::write_heatmap(&run.out("heatmap.tsv"), &bins, &citegraph::pair_heatmap(&g, &bins)?)?;
            citegraph::write_mu(&run.out("mu.tsv"), &g)?;
            let path = run.out("homophily.tsv");
            let mut out = create(&path)?;
            let io = |e| Error::io(&path, e);
            writeln!(out, "graph\tmean_abs_diff").map_err(io)?;
            let fmt = |x: Option<f64>| x.map(fmt9).unwrap_or_else(|| "NA".into());
            writeln!(out, "observed\t{}", fmt(citegraph::homophily_gap(&g))).map_err(io)?;
            for r in 0..cfg.null_replicates {
                let null = citegraph::shuffled_null(&g, window_seed(cfg.seed, r as i32));
                writeln!(out, "null_{r}\t{}", fmt(citegraph::homophily_gap(&null))).map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
        AnalyzeKind::Reach => {
            let g = load_graph(&mut run)?;
            let bins = cfg.bins()?;
            let m = citegraph::aggregate_reach(&g, cfg.sample_fraction, &bins, cfg.seed)?;
            citegraph::write_matrix(&run.out("reach_R.tsv"), &bins, &m.r)?;
            citegraph::write_matrix(&run.out("reach_L.tsv"), &bins, &m.l)?;
            citegraph::write_matrix(&run.out("reach_Y.tsv"), &bins, &m.y)?;
        }
        AnalyzeKind::Groups => {
            let scored = load_scores(&mut run)?;
            let records = load_records(&mut run)?;
            let p = run.input(&stage_file(cfg, Stage::Ingest, "journal_fields.tsv"), "ingest")?;
            let jf = corpus::load_journal_fields(&p)?;
            let journal: HashMap<&str, &str> = records.iter().map(|r| (r.pmid.as_str(), r.journal.as_str())).collect();
            let w = cfg.histogram_width;
            let by_journal = scored.iter().map(|s| {
                let keys = journal.get(s.pmid.as_str()).map(|j| vec![j.to_string()]).unwrap_or_default();
                (keys, s.score)
            });
            analysis::write_groups(&run.out("groups_journal.tsv"), &analysis::group_summary(by_journal, w)?)?;
            let by_field = scored.iter().map(|s| {
                let keys = journal
                    .get(s.pmid.as_str())
                    .map(|j| jf.fields(j).to_vec())
                    .unwrap_or_default();
                (keys, s.score)
            });
            analysis::write_groups(&run.out("groups_field.tsv"), &analysis::group_summary(by_field, w)?)?;
            let by_weber = analysis::weber_keys(&scored);
            analysis::write_groups(&run.out("groups_weber.tsv"), &analysis::group_summary(by_weber, w)?)?;
        }
        AnalyzeKind::Trials => {
            let scored = load_scores(&mut run)?;
            let records = load_records(&mut run)?;
            let phase: HashMap<&str, Option<u8>> =
                records.iter().map(|r| (r.pmid.as_str(), r.trial_phase)).collect();
            let items: Vec<(Option<u8>, f64)> = scored
                .iter()
                .map(|s| (phase.get(s.pmid.as_str()).copied().flatten(), s.score))
                .collect();
            let t = analysis::trial_phase_summary(&items, cfg.n_perm, cfg.seed, cfg.histogram_width)?;
            analysis::write_groups(&run.out("groups_trial.tsv"), &t.summary)?;
            analysis::write_perm_tests(&run.out("perm_tests.tsv"), &t.tests)?;
        }
        AnalyzeKind::Trajectory => {
            let vocab = load_vocab(&mut run)?;
            let p = run.input(&stage_file(cfg, Stage::Score, "term_scores.tsv"), "score")?;
            let scores = axis::read_term_scores(&p, &vocab)?;
            write_trajectories(&run.out("trajectories.tsv"), cfg, &vocab, &scores)?;
        }
        AnalyzeKind::Threshold => {
            let scored = load_scores(&mut run)?;
            let s: Vec<f64> = scored.iter().map(|p| p.score).collect();
            let h = analysis::histogram(&s, cfg.histogram_width)?;
            analysis::write_histogram(&run.out("histogram.tsv"), &h, analysis::detect_threshold(&h))?;
        }
        AnalyzeKind::Similarity => {
            let vocab = load_vocab(&mut run)?;
            let embs = load_embeddings(&mut run, &vocab)?;
            let path = run.out("similarity.tsv");
            let mut out = create(&path)?;
            let io = |e| Error::io(&path, e);
            writeln!(
                out,
                "window\twithin_n\twithin_mean\twithin_median\tbetween_n\tbetween_mean\tbetween_median\tp\tn_perm"
            )
            .map_err(io)?;
            for emb in &embs {
                let t = emb.window_end;
                let s = match analysis::within_between_similarity(
                    emb,
                    &vocab,
                    cfg.sample_pairs,
                    cfg.n_perm,
                    window_seed(cfg.seed, t),
                ) {
                    Ok(s) => s,
                    Err(e @ Error::Empty(_)) => {
                        warn!("window {t}: {e}");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let row = PermTestRow {
                    group_a: "between".into(),
                    group_b: "within".into(),
                    result: s.test.clone(),
                };
                writeln!(
                    out,
                    "{t}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.within.n,
                    fmt9(s.within.mean),
                    fmt9(s.within.median),
                    s.between.n,
                    fmt9(s.between.mean),
                    fmt9(s.between.median),
                    fmt9(row.result.p_value),
                    row.result.n_perm.map(|n| n.to_string()).unwrap_or_else(|| "exact".into())
                )
                .map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
    }
    run.commit()
}

/// `term, year, score|NA, baseline` where the baseline is the mean over all
/// scored terms of that year.
fn write_trajectories(
    path: &Path,
    cfg: &PipelineConfig,
    vocab: &MeshVocabulary,
    scores: &BTreeMap<(i32, u32), f64>,
) -> Result<()> {
    let mut years: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for (&(y, _), &s) in scores {
        let e = years.entry(y).or_insert((0.0, 0));
        e.0 += s;
        e.1 += 1;
    }
    let terms: Vec<u32> = if cfg.trajectory_terms.is_empty() {
        let set: std::collections::BTreeSet<u32> = scores.keys().map(|k| k.1).collect();
        set.into_iter().collect()
    } else {
        cfg.trajectory_terms
            .iter()
            .map(|n| vocab.id(n).ok_or_else(|| Error::UnknownTermName(n.clone())))
            .collect::<Result<_>>()?
    };
    let io = |e| Error::io(path, e);
    let mut out = create(path)?;
    writeln!(out, "term\tyear\tscore\tbaseline").map_err(io)?;
    for t in terms {
        let name = vocab.name(t)?;
        for (&y, &(sum, n)) in &years {
            let s = scores.get(&(y, t)).map(|s| fmt9(*s)).unwrap_or_else(|| "NA".into());
            writeln!(out, "{name}\t{y}\t{s}\t{}", fmt9(sum / n as f64)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
