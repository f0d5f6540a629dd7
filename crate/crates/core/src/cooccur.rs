//! Sliding-window term co-occurrence counts.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{PaperRecord, TermId};
use crate::error::{Error, Result};

/// Upper-triangular co-occurrence counts for one window `[t - len + 1, t]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    pub window_end: i32,
    /// `(i, j, m_ij)` with `i < j`, sorted, no zero counts.
    entries: Vec<(TermId, TermId, u64)>,
    /// Papers in the window carrying each term.
    node_paper_counts: BTreeMap<TermId, u64>,
}

#[derive(Default)]
struct Partial {
    pairs: HashMap<(TermId, TermId), u64>,
    nodes: HashMap<TermId, u64>,
}

impl Partial {
    fn add(mut self, paper: &PaperRecord) -> Self {
        // `terms` is sorted and distinct, so every pair arrives as (lo, hi).
        let terms = &paper.terms;
        for (a, &ti) in terms.iter().enumerate() {
            *self.nodes.entry(ti).or_default() += 1;
            for &tj in &terms[a + 1..] {
                *self.pairs.entry((ti, tj)).or_default() += 1;
            }
        }
        self
    }

    fn merge(mut self, other: Partial) -> Self {
        let (mut big, small) = if self.pairs.len() >= other.pairs.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, self)
        };
        for (k, v) in small.pairs {
            *big.pairs.entry(k).or_default() += v;
        }
        for (k, v) in small.nodes {
            *big.nodes.entry(k).or_default() += v;
        }
        big
    }
}

fn normalize(terms: &[TermId]) -> Option<Vec<TermId>> {
    if terms.windows(2).all(|w| w[0] < w[1]) {
        None
    } else {
        let mut v = terms.to_vec();
        v.sort_unstable();
        v.dedup();
        Some(v)
    }
}

impl CooccurrenceMatrix {
    pub fn empty(window_end: i32) -> Self {
        CooccurrenceMatrix {
            window_end,
            entries: Vec::new(),
            node_paper_counts: BTreeMap::new(),
        }
    }

    /// Builds from explicit parts; pairs are canonicalized and merged.
    pub fn from_parts(
        window_end: i32,
        pairs: impl IntoIterator<Item = (TermId, TermId, u64)>,
        node_paper_counts: impl IntoIterator<Item = (TermId, u64)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<(TermId, TermId), u64> = BTreeMap::new();
        for (i, j, w) in pairs {
            if i == j {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry ({i}, {i}) in co-occurrence matrix"
                )));
            }
            if w > 0 {
                *merged.entry((i.min(j), i.max(j))).or_default() += w;
            }
        }
        Ok(CooccurrenceMatrix {
            window_end,
            entries: merged.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
            node_paper_counts: node_paper_counts.into_iter().filter(|&(_, c)| c > 0).collect(),
        })
    }

    pub fn entries(&self) -> &[(TermId, TermId, u64)] {
        &self.entries
    }

    pub fn node_paper_counts(&self) -> &BTreeMap<TermId, u64> {
        &self.node_paper_counts
    }

    pub fn get(&self, i: TermId, j: TermId) -> u64 {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by(|&(a, b, _)| (a, b).cmp(&key))
            .map(|k| self.entries[k].2)
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Terms with at least one co-occurrence, ascending.
    pub fn vocabulary(&self) -> Vec<TermId> {
        let mut v: Vec<TermId> = self
            .entries
            .iter()
            .flat_map(|&(i, j, _)| [i, j])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Weighted degree `Σ_j m_ij` per term in [`CooccurrenceMatrix::vocabulary`] order.
    pub fn degrees(&self) -> BTreeMap<TermId, u64> {
        let mut d = BTreeMap::new();
        for &(i, j, w) in &self.entries {
            *d.entry(i).or_default() += w;
            *d.entry(j).or_default() += w;
        }
        d
    }

    pub fn total_weight(&self) -> u64 {
        self.entries.iter().map(|e| e.2).sum()
    }
}

/// Counts papers with year in `[t - window + 1, t]` that carry both terms of
/// each pair. Independent of paper order and of the number of threads.
pub fn build_window_matrix(papers: &[PaperRecord], t: i32, window: u32) -> Result<CooccurrenceMatrix> {
    if window == 0 {
        return Err(Error::InvalidArgument("window length must be >= 1".into()));
    }
    let start = t - window as i32 + 1;
    let partial = papers
        .par_iter()
        .filter(|p| p.year >= start && p.year <= t)
        .fold(Partial::default, |acc, p| match normalize(&p.terms) {
            None => acc.add(p),
            Some(terms) => acc.add(&PaperRecord {
                terms,
                ..p.clone()
            }),
        })
        .reduce(Partial::default, Partial::merge);

    let mut entries: Vec<(TermId, TermId, u64)> =
        partial.pairs.into_iter().map(|((i, j), w)| (i, j, w)).collect();
    entries.sort_unstable();
    Ok(CooccurrenceMatrix {
        window_end: t,
        entries,
        node_paper_counts: partial.nodes.into_iter().collect(),
    })
}

pub fn matrix_file_name(t: i32) -> String {
    format!("cooccur_{t}.tsv")
}

/// Companion file holding per-term paper counts next to an edge list.
pub fn nodes_sidecar_path(edge_list: &Path) -> PathBuf {
    let stem = edge_list
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    edge_list.with_file_name(format!("{stem}.nodes.tsv"))
}

/// Writes `i<TAB>j<TAB>weight` lines sorted by `(i, j)`, plus a
/// `term<TAB>papers` sidecar so that re-import is lossless.
pub fn export_edge_list(m: &CooccurrenceMatrix, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for &(i, j, w) in &m.entries {
        writeln!(out, "{i}\t{j}\t{w}").map_err(io)?;
    }
    out.flush().map_err(io)?;

    let side = nodes_sidecar_path(path);
    let mut out = BufWriter::new(File::create(&side).map_err(|e| Error::io(&side, e))?);
    for (t, c) in &m.node_paper_counts {
        writeln!(out, "{t}\t{c}").map_err(|e| Error::io(&side, e))?;
    }
    out.flush().map_err(|e| Error::io(&side, e))
}

fn parse_u<T: std::str::FromStr>(s: &str, path: &Path, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("bad integer {s:?}")))
}

/// Reads an edge list written by [`export_edge_list`]. The sidecar is optional.
pub fn import_edge_list(path: &Path, window_end: i32) -> Result<CooccurrenceMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, n + 1, "expected `i<TAB>j<TAB>weight`"));
        }
        pairs.push((
            parse_u(cols[0], path, n + 1)?,
            parse_u(cols[1], path, n + 1)?,
            parse_u(cols[2], path, n + 1)?,
        ));
    }
    let side = nodes_sidecar_path(path);
    let mut nodes = Vec::new();
    if side.exists() {
        let file = File::open(&side).map_err(|e| Error::io(&side, e))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&side, e))?;
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&side, n + 1, "expected `term<TAB>papers`"))?;
            nodes.push((parse_u(a, &side, n + 1)?, parse_u(b, &side, n + 1)?));
        }
    }
    CooccurrenceMatrix::from_parts(window_end, pairs, nodes)
}
