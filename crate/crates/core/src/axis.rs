//! Translational axis construction and level scores for terms and papers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use crate::corpus::{majority_rule, MeshVocabulary, PaperRecord, TermId, WeberCategory};
use crate::embed::{cosine_similarity, TermEmbedding};
use crate::error::{Error, Result};
use crate::numfmt::fmt9;

/// Unweighted componentwise mean.
pub fn centroid(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Empty("centroid of no vectors".into()))?;
    let d = first.len();
    let mut c = vec![0.0; d];
    for v in vectors {
        if v.len() != d {
            return Err(Error::InvalidArgument("centroid of vectors with different lengths".into()));
        }
        c.iter_mut().zip(v.iter()).for_each(|(a, b)| *a += b);
    }
    let n = vectors.len() as f64;
    c.iter_mut().for_each(|a| *a /= n);
    Ok(c)
}

/// Direction from the basic-seed centroid to the applied-seed centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationalAxis {
    pub window_end: i32,
    pub vector: Vec<f64>,
    pub n_basic: usize,
    pub n_applied: usize,
}

/// Cell/molecular and animal seeds are pooled as basic; human seeds are
/// applied. Seeds absent from the window are skipped.
pub fn build_axis(emb: &TermEmbedding, vocab: &MeshVocabulary) -> Result<TranslationalAxis> {
    let mut basic: Vec<&[f64]> = Vec::new();
    let mut applied: Vec<&[f64]> = Vec::new();
    for (term, v) in emb.iter() {
        let cat = vocab.classify_term(term)?;
        if cat.is_basic() {
            basic.push(v);
        } else if cat.is_applied() {
            applied.push(v);
        }
    }
    let axis_err = |msg: &str| Error::Axis {
        window_end: emb.window_end,
        msg: msg.to_string(),
    };
    if basic.is_empty() {
        return Err(axis_err("no basic seed term in window"));
    }
    if applied.is_empty() {
        return Err(axis_err("no applied seed term in window"));
    }
    let b = centroid(&basic)?;
    let a = centroid(&applied)?;
    let vector: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    if vector.iter().all(|x| *x == 0.0) {
        return Err(axis_err("basic and applied centroids coincide"));
    }
    Ok(TranslationalAxis {
        window_end: emb.window_end,
        vector,
        n_basic: basic.len(),
        n_applied: applied.len(),
    })
}

/// Cosine of the term's vector with the axis; `None` when the term is not in
/// the window (or has a zero vector).
pub fn term_level_score(term: TermId, emb: &TermEmbedding, axis: &TranslationalAxis) -> Option<f64> {
    cosine_similarity(emb.get(term)?, &axis.vector).ok()
}

/// One window's axis and term scores.
#[derive(Clone, Debug)]
pub struct WindowScores {
    pub axis: TranslationalAxis,
    pub embedding: TermEmbedding,
    term_scores: BTreeMap<TermId, f64>,
}

impl WindowScores {
    pub fn new(embedding: TermEmbedding, vocab: &MeshVocabulary) -> Result<Self> {
        let axis = build_axis(&embedding, vocab)?;
        let term_scores = embedding
            .terms()
            .iter()
            .filter_map(|&t| term_level_score(t, &embedding, &axis).map(|s| (t, s)))
            .collect();
        Ok(WindowScores {
            axis,
            embedding,
            term_scores,
        })
    }

    pub fn score(&self, term: TermId) -> Option<f64> {
        self.term_scores.get(&term).copied()
    }

    pub fn term_scores(&self) -> &BTreeMap<TermId, f64> {
        &self.term_scores
    }
}

/// Term scores for every embedded window.
#[derive(Clone, Debug, Default)]
pub struct ScoreTables {
    windows: BTreeMap<i32, WindowScores>,
}

impl ScoreTables {
    pub fn build(embeddings: impl IntoIterator<Item = TermEmbedding>, vocab: &MeshVocabulary) -> Result<Self> {
        let mut windows = BTreeMap::new();
        for emb in embeddings {
            windows.insert(emb.window_end, WindowScores::new(emb, vocab)?);
        }
        Ok(ScoreTables { windows })
    }

    /// Adds or replaces the window ending at `ws.axis.window_end`.
    pub fn insert(&mut self, ws: WindowScores) {
        self.windows.insert(ws.axis.window_end, ws);
    }

    pub fn window(&self, year: i32) -> Option<&WindowScores> {
        self.windows.get(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.windows.keys().copied()
    }

    pub fn term_score(&self, year: i32, term: TermId) -> Option<f64> {
        self.windows.get(&year)?.score(term)
    }

    pub fn windows(&self) -> impl Iterator<Item = &WindowScores> {
        self.windows.values()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PaperScore {
    Scored {
        score: f64,
        n_scored: usize,
        n_original: usize,
    },
    NotScoreable {
        n_scored: usize,
        n_original: usize,
    },
}

impl PaperScore {
    pub fn score(&self) -> Option<f64> {
        match self {
            PaperScore::Scored { score, .. } => Some(*score),
            PaperScore::NotScoreable { .. } => None,
        }
    }
}

/// Mean term score at the paper's publication year. Terms missing from that
/// window do not count toward the majority rule.
pub fn score_paper(paper: &PaperRecord, tables: &ScoreTables) -> Result<PaperScore> {
    let window = tables
        .window(paper.year)
        .ok_or(Error::YearOutOfRange { year: paper.year })?;
    let scores: Vec<f64> = paper.terms.iter().filter_map(|&t| window.score(t)).collect();
    let n_scored = scores.len();
    if !majority_rule(n_scored, paper.n_original) {
        return Ok(PaperScore::NotScoreable {
            n_scored,
            n_original: paper.n_original,
        });
    }
    Ok(PaperScore::Scored {
        score: scores.iter().sum::<f64>() / n_scored as f64,
        n_scored,
        n_original: paper.n_original,
    })
}

/// Cosine between the axis and the centroid of the paper's term vectors.
pub fn score_paper_alt(paper: &PaperRecord, emb: &TermEmbedding, axis: &TranslationalAxis) -> Result<PaperScore> {
    if paper.year != emb.window_end || axis.window_end != emb.window_end {
        return Err(Error::YearOutOfRange { year: paper.year });
    }
    let vectors: Vec<&[f64]> = paper.terms.iter().filter_map(|&t| emb.get(t)).collect();
    let n_scored = vectors.len();
    if !majority_rule(n_scored, paper.n_original) {
        return Ok(PaperScore::NotScoreable {
            n_scored,
            n_original: paper.n_original,
        });
    }
    let c = centroid(&vectors)?;
    Ok(PaperScore::Scored {
        score: cosine_similarity(&c, &axis.vector)?,
        n_scored,
        n_original: paper.n_original,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Years where the term has a score.
    pub series: Vec<(i32, f64)>,
    /// Embedded years in range where the term is absent.
    pub missing_years: Vec<i32>,
    /// Mean score over all terms, one entry per embedded year in range.
    pub baseline: Vec<(i32, f64)>,
}

pub fn term_trajectory(
    term: TermId,
    years: RangeInclusive<i32>,
    tables: &ScoreTables,
    vocab: &MeshVocabulary,
) -> Result<Trajectory> {
    vocab.name(term)?;
    let mut out = Trajectory {
        series: Vec::new(),
        missing_years: Vec::new(),
        baseline: Vec::new(),
    };
    for w in tables.windows.range(years).map(|(_, w)| w) {
        let t = w.axis.window_end;
        match w.score(term) {
            Some(s) => out.series.push((t, s)),
            None => out.missing_years.push(t),
        }
        let all = w.term_scores();
        if !all.is_empty() {
            out.baseline.push((t, all.values().sum::<f64>() / all.len() as f64));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct YearSummary {
    pub year: i32,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    pub n: usize,
}

/// Per-year mean and population standard deviation of scored papers carrying `term`.
pub fn papers_with_term_trajectory(
    term: TermId,
    papers: &[(&PaperRecord, f64)],
    years: RangeInclusive<i32>,
) -> Vec<YearSummary> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = years.clone().map(|y| (y, Vec::new())).collect();
    for (p, s) in papers {
        if years.contains(&p.year) && p.terms.contains(&term) {
            by_year.get_mut(&p.year).unwrap().push(*s);
        }
    }
    by_year
        .into_iter()
        .map(|(year, xs)| {
            let n = xs.len();
            if n == 0 {
                return YearSummary {
                    year,
                    mean: None,
                    std_dev: None,
                    n,
                };
            }
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            YearSummary {
                year,
                mean: Some(mean),
                std_dev: Some(var.sqrt()),
                n,
            }
        })
        .collect()
}

/// One row of `paper_scores.tsv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPaper {
    pub pmid: String,
    pub year: i32,
    pub score: f64,
    pub weber: WeberCategory,
    pub n_scored: usize,
    pub n_original: usize,
}

/// Scores every paper; not-scoreable papers and papers outside the embedded
/// years are left out.
pub fn score_papers(papers: &[PaperRecord], tables: &ScoreTables, vocab: &MeshVocabulary) -> Vec<ScoredPaper> {
    papers
        .iter()
        .filter_map(|p| match score_paper(p, tables) {
            Ok(PaperScore::Scored {
                score,
                n_scored,
                n_original,
            }) => Some(ScoredPaper {
                pmid: p.pmid.clone(),
                year: p.year,
                score,
                weber: crate::corpus::weber_category(p, vocab),
                n_scored,
                n_original,
            }),
            _ => None,
        })
        .collect()
}

pub fn write_term_scores(path: &Path, tables: &ScoreTables, vocab: &MeshVocabulary) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for w in tables.windows() {
        for (&term, &s) in w.term_scores() {
            writeln!(out, "{}\t{}\t{}", w.axis.window_end, vocab.name(term)?, fmt9(s)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn write_axes(path: &Path, tables: &ScoreTables) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for w in tables.windows() {
        let a = &w.axis;
        let v: Vec<String> = a.vector.iter().map(|x| fmt9(*x)).collect();
        writeln!(out, "{}\t{}\t{}\t{}", a.window_end, a.n_basic, a.n_applied, v.join("\t")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_paper_scores(path: &Path, papers: &[ScoredPaper]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for p in papers {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.pmid,
            p.year,
            fmt9(p.score),
            p.weber,
            p.n_scored,
            p.n_original
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_paper_scores(path: &Path) -> Result<Vec<ScoredPaper>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::parse(path, n + 1, format!("bad {what}"));
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != 6 {
            return Err(Error::parse(path, n + 1, "expected 6 columns"));
        }
        out.push(ScoredPaper {
            pmid: c[0].to_string(),
            year: c[1].parse().map_err(|_| bad("year"))?,
            score: c[2].parse().map_err(|_| bad("score"))?,
            weber: c[3].parse().map_err(|_| bad("Weber category"))?,
            n_scored: c[4].parse().map_err(|_| bad("n_scored"))?,
            n_original: c[5].parse().map_err(|_| bad("n_original"))?,
        });
    }
    Ok(out)
}

/// Reads `term_scores.tsv` back into `(year, term) → score`.
pub fn read_term_scores(path: &Path, vocab: &MeshVocabulary) -> Result<BTreeMap<(i32, TermId), f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let c: Vec<&str> = line.split('\t').collect();
        let parsed = (c.len() == 3)
            .then(|| Some((c[0].parse::<i32>().ok()?, vocab.id(c[1])?, c[2].parse::<f64>().ok()?)))
            .flatten();
        let (y, t, s) = parsed.ok_or_else(|| Error::parse(path, n + 1, "expected `year<TAB>term<TAB>score`"))?;
        out.insert((y, t), s);
    }
    Ok(out)
}
