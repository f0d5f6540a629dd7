//! Distributional statistics over level scores.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::axis::ScoredPaper;
use crate::bins::BinningSpec;
use crate::corpus::MeshVocabulary;
use crate::embed::{cosine_similarity, TermEmbedding};
use crate::error::{Error, Result};
use crate::numfmt::fmt9;

pub const DEFAULT_HISTOGRAM_WIDTH: f64 = 0.02;

/// Comparisons against the observed statistic allow this much slack.
const STAT_TOL: f64 = 1e-9;

/// Linear-interpolation quantile (R type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    Some(median_in_place(&mut v))
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (left, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreHistogram {
    pub bins: BinningSpec,
    pub counts: Vec<u64>,
    pub n: usize,
    pub median: f64,
}

pub fn histogram(scores: &[f64], width: f64) -> Result<ScoreHistogram> {
    if scores.is_empty() {
        return Err(Error::Empty("histogram of no scores".into()));
    }
    let bins = BinningSpec::new(width)?;
    let mut counts = vec![0u64; bins.len()];
    for &s in scores {
        let k = bins
            .index(s)
            .ok_or_else(|| Error::InvalidArgument(format!("score {s} outside [-1, 1]")))?;
        counts[k] += 1;
    }
    Ok(ScoreHistogram {
        bins,
        counts,
        n: scores.len(),
        median: median(scores).unwrap(),
    })
}

/// Below this many bins mode detection runs on raw counts; a 3-bin average
/// over a handful of bins erases the structure it is meant to protect.
const MIN_BINS_FOR_SMOOTHING: usize = 10;

/// Centered 3-bin moving average, zero beyond the ends.
fn smoothed(counts: &[u64]) -> Vec<f64> {
    let n = counts.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            counts[lo..=hi].iter().sum::<u64>() as f64 / 3.0
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Mode {
    start: usize,
    end: usize,
    height: f64,
    prominence: f64,
}

/// Plateau-aware local maxima, each with its topographic prominence.
/// The series is treated as zero-padded at both ends.
fn modes(h: &[f64]) -> Vec<Mode> {
    let n = h.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        let left_lower = i == 0 || h[i - 1] < h[i];
        let right_lower = j + 1 == n || h[j + 1] < h[i];
        if left_lower && right_lower && h[i] > 0.0 {
            let height = h[i];
            let mut left_base = height;
            let mut k = i;
            let mut left_edge = true;
            while k > 0 {
                k -= 1;
                if h[k] > height {
                    left_edge = false;
                    break;
                }
                left_base = left_base.min(h[k]);
            }
            if left_edge {
                left_base = 0.0;
            }
            let mut right_base = height;
            let mut right_edge = true;
            for &v in &h[j + 1..] {
                if v > height {
                    right_edge = false;
                    break;
                }
                right_base = right_base.min(v);
            }
            if right_edge {
                right_base = 0.0;
            }
            out.push(Mode {
                start: i,
                end: j,
                height,
                prominence: height - left_base.max(right_base),
            });
        }
        i = j + 1;
    }
    out
}

/// Midpoint of the lowest raw-count bin between the two dominant modes, or
/// `None` for a unimodal histogram. Modes are ranked by prominence, so noise
/// bumps on the flank of one peak do not outrank a second genuine peak.
pub fn detect_threshold(h: &ScoreHistogram) -> Option<f64> {
    let series: Vec<f64> = if h.counts.len() >= MIN_BINS_FOR_SMOOTHING {
        smoothed(&h.counts)
    } else {
        h.counts.iter().map(|&c| c as f64).collect()
    };
    let mut ms = modes(&series);
    if ms.len() < 2 {
        return None;
    }
    ms.sort_by(|a, b| {
        b.prominence
            .total_cmp(&a.prominence)
            .then(b.height.total_cmp(&a.height))
            .then(a.start.cmp(&b.start))
    });
    let (mut a, mut b) = (ms[0], ms[1]);
    if a.start > b.start {
        std::mem::swap(&mut a, &mut b);
    }
    let between = a.end + 1..b.start;
    let low = between.clone().map(|k| h.counts[k]).min()?;
    // Among tied minima (an empty valley, say) take the middle one.
    let ties: Vec<usize> = between.filter(|&k| h.counts[k] == low).collect();
    Some(h.bins.midpoint(ties[(ties.len() - 1) / 2]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupStats {
    pub key: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSummary {
    pub bins: BinningSpec,
    pub groups: Vec<GroupStats>,
    pub excluded: usize,
}

impl GroupSummary {
    pub fn get(&self, key: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.key == key)
    }
}

/// Groups scores by key; an item with several keys joins each group and an
/// item with none is counted as excluded. Groups are ordered by median, then key.
pub fn group_summary<I>(items: I, width: f64) -> Result<GroupSummary>
where
    I: IntoIterator<Item = (Vec<String>, f64)>,
{
    let bins = BinningSpec::new(width)?;
    let mut by_key: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut excluded = 0;
    for (keys, score) in items {
        if keys.is_empty() {
            excluded += 1;
        }
        for k in keys {
            by_key.entry(k).or_default().push(score);
        }
    }
    let mut groups = Vec::with_capacity(by_key.len());
    for (key, mut scores) in by_key {
        let h = histogram(&scores, width)?;
        scores.sort_by(f64::total_cmp);
        groups.push(GroupStats {
            key,
            n: scores.len(),
            median: quantile_sorted(&scores, 0.5),
            q1: quantile_sorted(&scores, 0.25),
            q3: quantile_sorted(&scores, 0.75),
            counts: h.counts,
        });
    }
    groups.sort_by(|a, b| a.median.total_cmp(&b.median).then_with(|| a.key.cmp(&b.key)));
    Ok(GroupSummary { bins, groups, excluded })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermutationMode {
    /// Exact when the number of splits does not exceed `n_perm`.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermutationResult {
    /// `median(b) − median(a)`.
    pub statistic: f64,
    pub p_value: f64,
    /// `None` when the p-value comes from full enumeration.
    pub n_perm: Option<usize>,
    pub exact: bool,
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

/// One-sided test of `median(b) > median(a)`.
pub fn permutation_test_median(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<PermutationResult> {
    permutation_test_median_with(a, b, n_perm, seed, PermutationMode::Auto)
}

const MC_CHUNKS: u64 = 64;

pub fn permutation_test_median_with(
    a: &[f64],
    b: &[f64],
    n_perm: usize,
    seed: u64,
    mode: PermutationMode,
) -> Result<PermutationResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("permutation test needs two non-empty groups".into()));
    }
    let statistic = median(b).unwrap() - median(a).unwrap();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let na = a.len();
    let splits = binomial(pooled.len(), na);
    let exact = match mode {
        PermutationMode::Exact => true,
        PermutationMode::MonteCarlo => false,
        PermutationMode::Auto => splits.is_some_and(|s| s <= n_perm as u128),
    };
    if exact {
        let total = splits
            .filter(|&s| s <= u64::MAX as u128)
            .ok_or_else(|| Error::InvalidArgument("too many splits for exact enumeration".into()))?;
        let hits = exact_hits(&pooled, na, statistic);
        return Ok(PermutationResult {
            statistic,
            p_value: hits as f64 / total as f64,
            n_perm: None,
            exact: true,
        });
    }
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be positive".into()));
    }
    let per_chunk = n_perm as u64 / MC_CHUNKS;
    let extra = n_perm as u64 % MC_CHUNKS;
    let hits: u64 = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let reps = per_chunk + u64::from(c < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut work = pooled.clone();
            let mut ga = Vec::with_capacity(na);
            let mut gb = Vec::with_capacity(pooled.len() - na);
            let mut hits = 0u64;
            for _ in 0..reps {
                work.shuffle(&mut rng);
                ga.clear();
                ga.extend_from_slice(&work[..na]);
                gb.clear();
                gb.extend_from_slice(&work[na..]);
                let s = median_in_place(&mut gb) - median_in_place(&mut ga);
                hits += u64::from(s >= statistic - STAT_TOL);
            }
            hits
        })
        .sum();
    Ok(PermutationResult {
        statistic,
        p_value: (1 + hits) as f64 / (1 + n_perm) as f64,
        n_perm: Some(n_perm),
        exact: false,
    })
}

/// Number of splits of `pooled` into `na` / rest whose statistic reaches `observed`.
fn exact_hits(pooled: &[f64], na: usize, observed: f64) -> u64 {
    let n = pooled.len();
    let mut idx: Vec<usize> = (0..na).collect();
    let mut in_a = vec![false; n];
    let mut ga = Vec::with_capacity(na);
    let mut gb = Vec::with_capacity(n - na);
    let mut hits = 0u64;
    loop {
        in_a.iter_mut().for_each(|x| *x = false);
        idx.iter().for_each(|&i| in_a[i] = true);
        ga.clear();
        gb.clear();
        for (i, &v) in pooled.iter().enumerate() {
            if in_a[i] {
                ga.push(v)
            } else {
                gb.push(v)
            }
        }
        let s = median_in_place(&mut gb) - median_in_place(&mut ga);
        hits += u64::from(s >= observed - STAT_TOL);

        // Next combination in lexicographic order.
        let mut i = na;
        loop {
            if i == 0 {
                return hits;
            }
            i -= 1;
            if idx[i] < n - na + i {
                break;
            }
            if i == 0 {
                return hits;
            }
        }
        idx[i] += 1;
        for k in i + 1..na {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityStats {
    pub within: PairStats,
    pub between: PairStats,
    /// One-sided test of `median(within) > median(between)`.
    pub test: PermutationResult,
}

fn pair_stats(v: &[f64]) -> PairStats {
    PairStats {
        n: v.len(),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: median(v).unwrap(),
    }
}

/// Cosine similarity of within-category pairs (basic-basic, applied-applied)
/// against between-category pairs. Each kind uses every pair when it has at
/// most `sample_pairs` of them and `sample_pairs` random pairs otherwise.
pub fn within_between_similarity(
    emb: &TermEmbedding,
    vocab: &MeshVocabulary,
    sample_pairs: usize,
    n_perm: usize,
    seed: u64,
) -> Result<SimilarityStats> {
    let mut basic = Vec::new();
    let mut applied = Vec::new();
    for (t, v) in emb.iter() {
        let c = vocab.classify_term(t)?;
        if c.is_basic() {
            basic.push(v);
        } else if c.is_applied() {
            applied.push(v);
        }
    }
    if basic.len() < 2 || applied.len() < 2 {
        return Err(Error::Empty(format!(
            "need at least two basic and two applied terms, found {} and {}",
            basic.len(),
            applied.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs_b = basic.len() * (basic.len() - 1) / 2;
    let pairs_a = applied.len() * (applied.len() - 1) / 2;
    let within_total = pairs_b + pairs_a;
    let within: Vec<f64> = if within_total <= sample_pairs {
        let mut out = Vec::with_capacity(within_total);
        for group in [&basic, &applied] {
            for i in 0..group.len() {
                for j in i + 1..group.len() {
                    out.push(cosine_similarity(group[i], group[j])?);
                }
            }
        }
        out
    } else {
        (0..sample_pairs)
            .map(|_| {
                // Pick a pair uniformly among all within pairs.
                let group = if rng.random_range(0..within_total) < pairs_b { &basic } else { &applied };
                let i = rng.random_range(0..group.len());
                let mut j = rng.random_range(0..group.len() - 1);
                if j >= i {
                    j += 1;
                }
                cosine_similarity(group[i], group[j])
            })
            .collect::<Result<_>>()?
    };
    let between_total = basic.len() * applied.len();
    let between: Vec<f64> = if between_total <= sample_pairs {
        let mut out = Vec::with_capacity(between_total);
        for u in &basic {
            for v in &applied {
                out.push(cosine_similarity(u, v)?);
            }
        }
        out
    } else {
        (0..sample_pairs)
            .map(|_| {
                let u = basic[rng.random_range(0..basic.len())];
                let v = applied[rng.random_range(0..applied.len())];
                cosine_similarity(u, v)
            })
            .collect::<Result<_>>()?
    };
    let test = permutation_test_median(&between, &within, n_perm, seed ^ 0x5eed)?;
    Ok(SimilarityStats {
        within: pair_stats(&within),
        between: pair_stats(&between),
        test,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermTestRow {
    pub group_a: String,
    pub group_b: String,
    pub result: PermutationResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub summary: GroupSummary,
    pub tests: Vec<PermTestRow>,
}

pub fn phase_key(phase: u8) -> String {
    if phase == 0 {
        "unspecified".into()
    } else {
        format!("phase{phase}")
    }
}

/// Summaries for phases 1–4 and all trials, plus one-sided tests of each
/// phase against the next present phase.
pub fn trial_phase_summary(items: &[(Option<u8>, f64)], n_perm: usize, seed: u64, width: f64) -> Result<TrialSummary> {
    let flagged: Vec<(u8, f64)> = items.iter().filter_map(|&(p, s)| Some((p?, s))).collect();
    if flagged.is_empty() {
        return Err(Error::Empty("no clinical-trial papers".into()));
    }
    let keyed = items.iter().map(|&(p, s)| match p {
        Some(0) => (vec!["all".to_string()], s),
        Some(p) => (vec![phase_key(p), "all".to_string()], s),
        None => (Vec::new(), s),
    });
    let summary = group_summary(keyed, width)?;
    let by_phase = |k: u8| -> Vec<f64> { flagged.iter().filter(|x| x.0 == k).map(|x| x.1).collect() };
    let present: Vec<(u8, Vec<f64>)> = (1..=4).map(|k| (k, by_phase(k))).filter(|(_, v)| !v.is_empty()).collect();
    let mut tests = Vec::new();
    for (i, w) in present.windows(2).enumerate() {
        let result = permutation_test_median(&w[0].1, &w[1].1, n_perm, seed.wrapping_add(i as u64))?;
        tests.push(PermTestRow {
            group_a: phase_key(w[0].0),
            group_b: phase_key(w[1].0),
            result,
        });
    }
    Ok(TrialSummary { summary, tests })
}

/// Weber-category key for each scored paper, `None` category excluded.
pub fn weber_keys(papers: &[ScoredPaper]) -> Vec<(Vec<String>, f64)> {
    papers
        .iter()
        .map(|p| {
            let keys = if p.weber.is_none() { Vec::new() } else { vec![p.weber.to_string()] };
            (keys, p.score)
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// `bin_mid, count` rows followed by `#` lines for n, median and threshold.
pub fn write_histogram(path: &Path, h: &ScoreHistogram, threshold: Option<f64>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = create(path)?;
    writeln!(out, "bin\tcount").map_err(io)?;
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(out, "{}\t{c}", fmt9(h.bins.midpoint(k))).map_err(io)?;
    }
    writeln!(out, "#n={}", h.n).map_err(io)?;
    writeln!(out, "#median={}", fmt9(h.median)).map_err(io)?;
    writeln!(out, "#bin_width={}", fmt9(h.bins.width())).map_err(io)?;
    match threshold {
        Some(t) => writeln!(out, "#threshold={}", fmt9(t)),
        None => writeln!(out, "#threshold=NA"),
    }
    .map_err(io)?;
    out.flush().map_err(io)
}

pub fn write_groups(path: &Path, s: &GroupSummary) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = create(path)?;
    write!(out, "group\tn\tmedian\tq1\tq3").map_err(io)?;
    for m in s.bins.midpoints() {
        write!(out, "\t{}", fmt9(m)).map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for g in &s.groups {
        write!(out, "{}\t{}\t{}\t{}\t{}", g.key, g.n, fmt9(g.median), fmt9(g.q1), fmt9(g.q3)).map_err(io)?;
        for c in &g.counts {
            write!(out, "\t{c}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    writeln!(out, "#excluded={}", s.excluded).map_err(io)?;
    out.flush().map_err(io)
}

pub fn write_perm_tests(path: &Path, rows: &[PermTestRow]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = create(path)?;
    writeln!(out, "group_a\tgroup_b\tstat\tp\tn_perm").map_err(io)?;
    for r in rows {
        let n = match r.result.n_perm {
            Some(n) => n.to_string(),
            None => "exact".into(),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{n}",
            r.group_a,
            r.group_b,
            fmt9(r.result.statistic),
            fmt9(r.result.p_value)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}
