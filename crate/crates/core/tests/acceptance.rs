//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use levelscore::analysis::{
    detect_threshold, histogram, median, permutation_test_median_with, quantile_sorted, trial_phase_summary,
    within_between_similarity, PermutationMode,
};
use levelscore::axis::{score_paper, score_paper_alt, score_papers, PaperScore, ScoreTables};
use levelscore::bins::BinningSpec;
use levelscore::citegraph::{
    aggregate_reach, build_graph, homophily_gap, reach_from_source, shuffled_null, CitationGraph, GraphNode,
};
use levelscore::cooccur::build_window_matrix;
use levelscore::corpus::{generate_synthetic_corpus, PaperRecord, SynthSpec, SyntheticCorpus, TermMix};
use levelscore::embed::{train_line, window_seed, EmbeddingParams, TermEmbedding};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("co-occurrence matches pair enumeration", Some(Duration::from_secs(5)), cooccurrence_oracle),
        ("reachability matches all-pairs BFS", Some(Duration::from_secs(5)), reachability_oracle),
        ("Monte-Carlo permutation p near exact", Some(Duration::from_secs(10)), permutation_oracle),
        ("planted separation recovered", Some(Duration::from_secs(60)), planted_separation),
        ("median LS basic-only < mixed < applied-only", None, mix_ordering),
        ("rotation invariance of scores", None, rotation_invariance),
        ("score bounds and majority rule", None, bounds_and_majority),
        ("citation homophily beats shuffled null", None, homophily_vs_null),
        ("trial-phase ordering recovered", None, trial_phase_ordering),
        ("pipeline output is byte-identical across runs", None, determinism),
        ("bimodal threshold located", None, threshold_detection),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let mut o = result.unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if let Some(limit) = limit {
            if elapsed > *limit {
                o.pass = false;
                o.detail.push_str(&format!("; over the {}s budget", limit.as_secs()));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name} ({}; {:.2}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- oracles

fn random_papers(rng: &mut ChaCha8Rng, n_papers: usize, n_terms: u32) -> Vec<PaperRecord> {
    (0..n_papers)
        .map(|i| {
            let k = rng.random_range(0..=n_terms.min(6));
            let mut all: Vec<u32> = (0..n_terms).collect();
            all.shuffle(rng);
            let mut terms = all[..k as usize].to_vec();
            terms.sort_unstable();
            PaperRecord {
                pmid: i.to_string(),
                year: rng.random_range(1990..=1996),
                journal: "J".into(),
                n_original: terms.len(),
                terms,
                trial_phase: None,
            }
        })
        .collect()
}

type PairCounts = BTreeMap<(u32, u32), u64>;

fn enumerate_pairs(papers: &[PaperRecord], t: i32, w: u32) -> (PairCounts, BTreeMap<u32, u64>) {
    let mut pairs = BTreeMap::new();
    let mut nodes = BTreeMap::new();
    for p in papers.iter().filter(|p| p.year <= t && p.year > t - w as i32) {
        for a in 0..p.terms.len() {
            *nodes.entry(p.terms[a]).or_insert(0) += 1;
            for b in a + 1..p.terms.len() {
                *pairs.entry((p.terms[a], p.terms[b])).or_insert(0) += 1;
            }
        }
    }
    (pairs, nodes)
}

fn cooccurrence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    for _ in 0..50 {
        let n_papers = rng.random_range(0..=20);
        let n_terms = rng.random_range(1..=10);
        let papers = random_papers(&mut rng, n_papers, n_terms);
        for t in 1990..=1996 {
            let w = rng.random_range(1..=5);
            let m = build_window_matrix(&papers, t, w).unwrap();
            let (pairs, nodes) = enumerate_pairs(&papers, t, w);
            let got: PairCounts = m.entries().iter().map(|&(i, j, c)| ((i, j), c)).collect();
            if got != pairs || *m.node_paper_counts() != nodes {
                return outcome(false, format!("mismatch at t={t} w={w}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("50 corpora, {checked} windows identical"))
}

fn random_dag(rng: &mut ChaCha8Rng) -> CitationGraph {
    let n = rng.random_range(1..=15);
    let mut year = 2000;
    let mut nodes = Vec::new();
    for i in 0..n {
        year -= rng.random_range(0..=2);
        let score = match rng.random_range(0..10) {
            0 => -1.0,
            1 => 1.0,
            _ => rng.random_range(-1.0..1.0),
        };
        nodes.push(GraphNode {
            pmid: i.to_string(),
            year,
            score,
        });
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.3) {
                edges.push((a, b));
            }
        }
    }
    CitationGraph::new(nodes, edges).unwrap()
}

type Cells = Vec<Option<f64>>;

/// Per-source R, L, Y from Floyd-Warshall distances.
fn brute_force_reach(g: &CitationGraph, bins: &BinningSpec) -> Vec<(usize, Cells, Cells, Cells)> {
    const INF: u64 = u64::MAX / 4;
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (a, b) in g.edges() {
        d[a][b] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let bin = |i: usize| bins.index(g.score(i)).unwrap();
    (0..n)
        .map(|i| {
            let mut r = vec![None; bins.len()];
            let mut l = vec![None; bins.len()];
            let mut y = vec![None; bins.len()];
            for jb in 0..bins.len() {
                let avail: Vec<usize> = (0..n)
                    .filter(|&j| j != i && bin(j) == jb && g.year(j) <= g.year(i))
                    .collect();
                if !avail.is_empty() {
                    let hit = avail.iter().filter(|&&j| d[i][j] < INF).count();
                    r[jb] = Some(hit as f64 / avail.len() as f64);
                }
                let reached: Vec<usize> = (0..n).filter(|&j| j != i && bin(j) == jb && d[i][j] < INF).collect();
                if !reached.is_empty() {
                    let ds: u64 = reached.iter().map(|&j| d[i][j]).sum();
                    let ys: i64 = reached.iter().map(|&j| (g.year(i) - g.year(j)) as i64).sum();
                    l[jb] = Some(ds as f64 / reached.len() as f64);
                    y[jb] = Some(ys as f64 / reached.len() as f64);
                }
            }
            (bin(i), r, l, y)
        })
        .collect()
}

fn mean_cells(per_source: &[(usize, Cells, Cells, Cells)], nb: usize, pick: fn(&(usize, Cells, Cells, Cells)) -> &Cells) -> Vec<Cells> {
    (0..nb)
        .map(|ib| {
            (0..nb)
                .map(|jb| {
                    let vals: Vec<f64> = per_source
                        .iter()
                        .filter(|s| s.0 == ib)
                        .filter_map(|s| pick(s)[jb])
                        .collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect()
        })
        .collect()
}

fn reachability_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let bins = BinningSpec::new(0.5).unwrap();
    let mut na_cells = 0;
    for case in 0..20 {
        let g = random_dag(&mut rng);
        let brute = brute_force_reach(&g, &bins);
        for (i, (b, r, l, y)) in brute.iter().enumerate() {
            let got = reach_from_source(&g, i, &bins).unwrap();
            if got.source_bin != *b || &got.r != r || &got.l != l || &got.y != y {
                return outcome(false, format!("DAG {case}: source {i} differs"));
            }
            na_cells += r.iter().chain(l).chain(y).filter(|v| v.is_none()).count();
        }
        let m = aggregate_reach(&g, 1.0, &bins, case).unwrap();
        let nb = bins.len();
        if m.r != mean_cells(&brute, nb, |s| &s.1)
            || m.l != mean_cells(&brute, nb, |s| &s.2)
            || m.y != mean_cells(&brute, nb, |s| &s.3)
        {
            return outcome(false, format!("DAG {case}: aggregate differs"));
        }
    }
    outcome(true, format!("20 DAGs identical, {na_cells} undefined cells placed alike"))
}

fn permutation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for (na, nb) in [(6, 6), (4, 5), (3, 6)] {
        let a: Vec<f64> = (0..na).map(|_| (rng.random_range(0.0..1.0f64) * 50.0).round() / 50.0).collect();
        let b: Vec<f64> = (0..nb).map(|_| (rng.random_range(0.1..1.1f64) * 50.0).round() / 50.0).collect();
        let exact = permutation_test_median_with(&a, &b, 100_000, 1, PermutationMode::Exact).unwrap();
        let again = permutation_test_median_with(&a, &b, 100_000, 999, PermutationMode::Exact).unwrap();
        if exact.p_value.to_bits() != again.p_value.to_bits() {
            return outcome(false, "exact p depends on the seed");
        }
        let mc = permutation_test_median_with(&a, &b, 100_000, 7, PermutationMode::MonteCarlo).unwrap();
        worst = worst.max((mc.p_value - exact.p_value).abs());
    }
    outcome(worst <= 0.01, format!("max |p_mc - p_exact| = {worst:.4}"))
}

// ------------------------------------------------------- synthetic fixture

struct Fixture {
    corpus: SyntheticCorpus,
    emb: TermEmbedding,
    tables: ScoreTables,
}

const YEAR: i32 = 2000;

/// One-window synthetic corpus with default mixing and a trained embedding.
fn fixture(seed: u64) -> Arc<Fixture> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Fixture>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(f) = cache.lock().unwrap().get(&seed) {
        return f.clone();
    }
    let spec = SynthSpec {
        year_from: YEAR,
        year_to: YEAR,
        seed,
        ..SynthSpec::default()
    };
    let corpus = generate_synthetic_corpus(&spec).unwrap();
    let m = build_window_matrix(&corpus.papers, YEAR, 5).unwrap();
    let params = EmbeddingParams {
        seed: window_seed(seed, YEAR),
        threads: 1,
        ..EmbeddingParams::default()
    };
    let emb = train_line(&m, &params).unwrap();
    let tables = ScoreTables::build([emb.clone()], &corpus.vocab).unwrap();
    let f = Arc::new(Fixture { corpus, emb, tables });
    cache.lock().unwrap().insert(seed, f.clone());
    f
}

/// P(x > y) + P(x = y)/2 over all pairs.
fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in pos {
        for &y in neg {
            s += if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

fn planted_separation() -> Outcome {
    let f = fixture(1);
    let vocab = &f.corpus.vocab;
    let w = f.tables.window(YEAR).unwrap();
    let (mut basic, mut applied) = (Vec::new(), Vec::new());
    for (&t, &s) in w.term_scores() {
        let c = vocab.classify_term(t).unwrap();
        if c.is_basic() {
            basic.push(s);
        } else if c.is_applied() {
            applied.push(s);
        }
    }
    let seed_auc = auc(&applied, &basic);
    let sim = within_between_similarity(&f.emb, vocab, 10_000, 999, 1).unwrap();
    let pass = seed_auc >= 0.95 && sim.within.mean > sim.between.mean;
    outcome(
        pass,
        format!(
            "AUC {seed_auc:.3} over {}+{} seed terms; cosine within {:.3} vs between {:.3}",
            basic.len(),
            applied.len(),
            sim.within.mean,
            sim.between.mean
        ),
    )
}

fn mix_ordering() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 1..=5 {
        let f = fixture(seed);
        let mut by_mix: BTreeMap<TermMix, Vec<f64>> = BTreeMap::new();
        for (p, mix) in f.corpus.papers.iter().zip(&f.corpus.paper_mix) {
            if let Some(s) = score_paper(p, &f.tables).unwrap().score() {
                by_mix.entry(*mix).or_default().push(s);
            }
        }
        let med = |m: TermMix| median(by_mix.get(&m).map(Vec::as_slice).unwrap_or(&[])).unwrap_or(f64::NAN);
        let (b, m, a) = (med(TermMix::BasicOnly), med(TermMix::Mixed), med(TermMix::AppliedOnly));
        pass &= b < m && m < a;
        details.push(format!("{b:.2}<{m:.2}<{a:.2}"));
    }
    outcome(pass, format!("seeds 1-5: {}", details.join(", ")))
}

fn random_rotation(d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for u in &q {
                let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

fn rotation_invariance() -> Outcome {
    let f = fixture(1);
    let q = random_rotation(f.emb.dim(), 44);
    let rotated = f
        .emb
        .map_vectors(|v| q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
        .unwrap();
    let tables = ScoreTables::build([rotated], &f.corpus.vocab).unwrap();
    let before = f.tables.window(YEAR).unwrap().term_scores();
    let after = tables.window(YEAR).unwrap().term_scores();
    let mut worst: f64 = 0.0;
    for (t, s) in before {
        worst = worst.max((s - after[t]).abs());
    }
    let mut papers = 0;
    for p in &f.corpus.papers {
        let a = score_paper(p, &f.tables).unwrap().score();
        let b = score_paper(p, &tables).unwrap().score();
        if let (Some(a), Some(b)) = (a, b) {
            worst = worst.max((a - b).abs());
            papers += 1;
        } else if a.is_some() != b.is_some() {
            return outcome(false, format!("paper {} changed scoreability", p.pmid));
        }
    }
    outcome(worst <= 1e-9, format!("max change {worst:.2e} over {} terms and {papers} papers", before.len()))
}

fn bounds_and_majority() -> Outcome {
    let f = fixture(1);
    let vocab = &f.corpus.vocab;
    let w = f.tables.window(YEAR).unwrap();
    let candidates: Vec<u32> = vocab.ids().filter(|&t| !vocab.is_excluded(t).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut scored, mut rejected) = (0, 0);
    for t in w.term_scores().values() {
        if !(-1.0..=1.0).contains(t) {
            return outcome(false, format!("term score {t} out of bounds"));
        }
    }
    for i in 0..10_000 {
        let k = rng.random_range(1..=8);
        let mut terms: Vec<u32> = candidates.choose_multiple(&mut rng, k).copied().collect();
        terms.sort_unstable();
        let missing = rng.random_range(0..=6);
        let paper = PaperRecord {
            pmid: i.to_string(),
            year: YEAR,
            journal: "J".into(),
            n_original: terms.len() + missing,
            terms,
            trial_phase: None,
        };
        let present = paper.terms.iter().filter(|&&t| w.score(t).is_some()).count();
        for result in [score_paper(&paper, &f.tables).unwrap(), score_paper_alt(&paper, &w.embedding, &w.axis).unwrap()] {
            match result {
                PaperScore::Scored { score, n_scored, n_original } => {
                    if !(-1.0..=1.0).contains(&score) || 2 * n_scored <= n_original || n_scored != present {
                        return outcome(false, format!("paper {i}: score {score}, {n_scored}/{n_original}"));
                    }
                    scored += 1;
                }
                PaperScore::NotScoreable { n_scored, n_original } => {
                    if 2 * n_scored > n_original {
                        return outcome(false, format!("paper {i} wrongly rejected"));
                    }
                    rejected += 1;
                }
            }
        }
    }
    outcome(true, format!("10000 fuzzed papers, {scored} scores in bounds, {rejected} rejected by majority"))
}

fn homophily_vs_null() -> Outcome {
    let f = fixture(1);
    let scored = score_papers(&f.corpus.papers, &f.tables, &f.corpus.vocab);
    let g = build_graph(&scored, &f.corpus.citations);
    let observed = homophily_gap(&g).unwrap();
    let mut nulls: Vec<f64> = (0..100).map(|r| homophily_gap(&shuffled_null(&g, r)).unwrap()).collect();
    nulls.sort_by(f64::total_cmp);
    let p1 = quantile_sorted(&nulls, 0.01);
    outcome(
        observed < p1,
        format!("observed {observed:.3} vs null 1st percentile {p1:.3} ({} edges)", g.edge_count()),
    )
}

fn trial_phase_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut items = Vec::new();
    for phase in 1..=4u8 {
        let normal = Normal::new(-0.05 + 0.1 * phase as f64, 0.25).unwrap();
        for _ in 0..500 {
            items.push((Some(phase), normal.sample(&mut rng).clamp(-1.0, 1.0)));
        }
    }
    let t = trial_phase_summary(&items, 10_000, 9, 0.02).unwrap();
    let medians: Vec<f64> = (1..=4).map(|k| t.summary.get(&format!("phase{k}")).unwrap().median).collect();
    let monotone = medians.windows(2).all(|w| w[0] < w[1]);
    let ps: Vec<f64> = t.tests.iter().map(|r| r.result.p_value).collect();
    let pass = monotone && ps.len() == 3 && ps.iter().all(|&p| p < 0.01);
    outcome(
        pass,
        format!(
            "medians {:?}, chained p {:?}",
            medians.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>(),
            ps.iter().map(|p| format!("{p:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = |cmd: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_levelscore"))
            .args([cmd, "--threads", "1", "--from", "1999", "--to", "2000", "--sample-fraction", "0.1"])
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "error")
            .status()
            .unwrap();
        assert!(status.success(), "`{cmd}` failed");
    };
    run("synth");
    run("pipeline");
    let first = snapshot(&out);
    run("synth");
    run("pipeline");
    let second = snapshot(&out);
    let manifests = first.keys().filter(|p| p.ends_with("manifest.json")).count();
    let differing: Vec<_> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let pass = differing.is_empty() && first.len() == second.len() && manifests > 0;
    outcome(
        pass,
        if pass {
            format!("{} files identical, {manifests} manifests", first.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn threshold_detection() -> Outcome {
    let low = Normal::new(-0.3, 0.15).unwrap();
    let high = Normal::new(0.5, 0.15).unwrap();
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scores: Vec<f64> = (0..2000).map(|_| low.sample(&mut rng)).collect();
        scores.extend((0..2000).map(|_| high.sample(&mut rng)));
        scores.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
        let h = histogram(&scores, 0.02).unwrap();
        if detect_threshold(&h).is_some_and(|t| t > -0.1 && t < 0.3) {
            hits += 1;
        }
    }
    outcome(hits >= 95, format!("{hits}/100 runs inside (-0.1, 0.3)"))
}
