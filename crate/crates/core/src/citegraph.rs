//! Citation-network analytics over level scores.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::axis::ScoredPaper;
use crate::bins::BinningSpec;
use crate::error::{Error, Result};
use crate::numfmt::fmt9;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub pmid: String,
    pub year: i32,
    pub score: f64,
}

/// Directed citing → cited graph in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CitationGraph {
    pmids: Vec<String>,
    years: Vec<i32>,
    scores: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl CitationGraph {
    /// Self-loops and duplicate edges are dropped; adjacency lists are sorted.
    pub fn new(nodes: Vec<GraphNode>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = nodes.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n {
                return Err(Error::UnknownNode(a));
            }
            if b >= n {
                return Err(Error::UnknownNode(b));
            }
            if a != b {
                adj[a].push(b as u32);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        let (mut pmids, mut years, mut scores) = (Vec::new(), Vec::new(), Vec::new());
        for node in nodes {
            pmids.push(node.pmid);
            years.push(node.year);
            scores.push(node.score);
        }
        Ok(CitationGraph {
            pmids,
            years,
            scores,
            offsets,
            targets,
        })
    }

    pub fn node_count(&self) -> usize {
        self.years.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn year(&self, i: usize) -> i32 {
        self.years[i]
    }

    pub fn score(&self, i: usize) -> f64 {
        self.scores[i]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn pmid(&self, i: usize) -> &str {
        &self.pmids[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i, j as usize)))
    }

    fn check(&self, i: usize) -> Result<()> {
        if i < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(i))
        }
    }
}

/// Restricts citations to scored papers. A scored paper becomes a node when
/// it appears anywhere in the citation list, even if all of its edges lead
/// to unscored papers.
pub fn build_graph(scored: &[ScoredPaper], citations: &[(String, String)]) -> CitationGraph {
    let cited_or_citing: HashSet<&str> = citations
        .iter()
        .flat_map(|(a, b)| [a.as_str(), b.as_str()])
        .collect();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for p in scored {
        if cited_or_citing.contains(p.pmid.as_str()) && !index.contains_key(p.pmid.as_str()) {
            index.insert(p.pmid.as_str(), nodes.len());
            nodes.push(GraphNode {
                pmid: p.pmid.clone(),
                year: p.year,
                score: p.score,
            });
        }
    }
    let edges: Vec<(usize, usize)> = citations
        .iter()
        .filter_map(|(a, b)| Some((*index.get(a.as_str())?, *index.get(b.as_str())?)))
        .collect();
    CitationGraph::new(nodes, edges).expect("indices come from the node table")
}

/// `count[I][J]`: edges whose citing paper lies in bin `I` and cited paper in bin `J`.
pub fn pair_heatmap(g: &CitationGraph, bins: &BinningSpec) -> Result<Vec<Vec<u64>>> {
    let mut counts = vec![vec![0u64; bins.len()]; bins.len()];
    let bin = |i: usize| {
        bins.index(g.score(i))
            .ok_or_else(|| Error::Numeric(format!("score {} outside [-1, 1]", g.score(i))))
    };
    for (a, b) in g.edges() {
        counts[bin(a)?][bin(b)?] += 1;
    }
    Ok(counts)
}

/// Score of `i` minus the mean score of its references; `None` without references.
pub fn mean_reference_diff(g: &CitationGraph, i: usize) -> Result<Option<f64>> {
    g.check(i)?;
    let refs = g.out_neighbors(i);
    if refs.is_empty() {
        return Ok(None);
    }
    let mean = refs.iter().map(|&j| g.score(j as usize)).sum::<f64>() / refs.len() as f64;
    Ok(Some(g.score(i) - mean))
}

/// Same topology and years, scores permuted across nodes.
pub fn shuffled_null(g: &CitationGraph, seed: u64) -> CitationGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    out.scores.shuffle(&mut rng);
    out
}

/// Mean `|score(citing) − score(cited)|` over all edges.
pub fn homophily_gap(g: &CitationGraph) -> Option<f64> {
    if g.edge_count() == 0 {
        return None;
    }
    let sum: f64 = g.edges().map(|(a, b)| (g.score(a) - g.score(b)).abs()).sum();
    Some(sum / g.edge_count() as f64)
}

/// Per-target-bin reachability, mean distance and mean year gap from one source.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceReach {
    pub source: usize,
    pub source_bin: usize,
    pub r: Vec<Option<f64>>,
    pub l: Vec<Option<f64>>,
    pub y: Vec<Option<f64>>,
}

/// Cumulative per-bin node counts by publication year.
struct YearBinCounts {
    years: Vec<i32>,
    cumulative: Vec<Vec<u64>>,
}

impl YearBinCounts {
    fn new(g: &CitationGraph, node_bins: &[usize], nbins: usize) -> Self {
        let mut per_year: BTreeMap<i32, Vec<u64>> = BTreeMap::new();
        for (i, &b) in node_bins.iter().enumerate().take(g.node_count()) {
            per_year.entry(g.year(i)).or_insert_with(|| vec![0; nbins])[b] += 1;
        }
        let mut years = Vec::new();
        let mut cumulative = Vec::new();
        let mut running = vec![0u64; nbins];
        for (y, c) in per_year {
            running.iter_mut().zip(&c).for_each(|(r, x)| *r += x);
            years.push(y);
            cumulative.push(running.clone());
        }
        YearBinCounts { years, cumulative }
    }

    /// Nodes per bin with year <= `year`.
    fn up_to(&self, year: i32) -> &[u64] {
        let k = self.years.partition_point(|&y| y <= year);
        &self.cumulative[k - 1]
    }
}

struct Workspace {
    dist: Vec<u32>,
    touched: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            dist: vec![u32::MAX; n],
            touched: Vec::new(),
            queue: VecDeque::new(),
        }
    }
}

struct ReachContext<'a> {
    g: &'a CitationGraph,
    bins: &'a BinningSpec,
    node_bins: Vec<usize>,
    counts: YearBinCounts,
}

impl<'a> ReachContext<'a> {
    fn new(g: &'a CitationGraph, bins: &'a BinningSpec) -> Result<Self> {
        let node_bins = (0..g.node_count())
            .map(|i| {
                bins.index(g.score(i))
                    .ok_or_else(|| Error::Numeric(format!("score {} outside [-1, 1]", g.score(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        let counts = YearBinCounts::new(g, &node_bins, bins.len());
        Ok(ReachContext {
            g,
            bins,
            node_bins,
            counts,
        })
    }

    fn run(&self, source: usize, ws: &mut Workspace) -> SourceReach {
        let g = self.g;
        let nb = self.bins.len();
        let t_i = g.year(source);

        ws.dist[source] = 0;
        ws.touched.push(source);
        ws.queue.push_back(source);
        while let Some(u) = ws.queue.pop_front() {
            let du = ws.dist[u];
            for &v in g.out_neighbors(u) {
                let v = v as usize;
                if ws.dist[v] == u32::MAX {
                    ws.dist[v] = du + 1;
                    ws.touched.push(v);
                    ws.queue.push_back(v);
                }
            }
        }

        let mut hits_in_window = vec![0u64; nb];
        let mut hits = vec![0u64; nb];
        let mut dist_sum = vec![0u64; nb];
        let mut year_sum = vec![0i64; nb];
        for &j in &ws.touched {
            if j == source {
                continue;
            }
            let b = self.node_bins[j];
            hits[b] += 1;
            dist_sum[b] += ws.dist[j] as u64;
            year_sum[b] += (t_i - g.year(j)) as i64;
            if g.year(j) <= t_i {
                hits_in_window[b] += 1;
            }
        }
        for &j in &ws.touched {
            ws.dist[j] = u32::MAX;
        }
        ws.touched.clear();

        let source_bin = self.node_bins[source];
        let available = self.counts.up_to(t_i);
        let mut out = SourceReach {
            source,
            source_bin,
            r: vec![None; nb],
            l: vec![None; nb],
            y: vec![None; nb],
        };
        for b in 0..nb {
            let den = available[b] - u64::from(b == source_bin);
            if den > 0 {
                out.r[b] = Some(hits_in_window[b] as f64 / den as f64);
            }
            if hits[b] > 0 {
                out.l[b] = Some(dist_sum[b] as f64 / hits[b] as f64);
                out.y[b] = Some(year_sum[b] as f64 / hits[b] as f64);
            }
        }
        out
    }
}

/// Breadth-first reachability from `source` along citing → cited edges.
///
/// The denominator for bin `J` is every node of that bin published no later
/// than the source, excluding the source. The reachability numerator counts
/// reached nodes inside that set; mean distance and year gap use every
/// reached node of the bin.
pub fn reach_from_source(g: &CitationGraph, source: usize, bins: &BinningSpec) -> Result<SourceReach> {
    g.check(source)?;
    let ctx = ReachContext::new(g, bins)?;
    Ok(ctx.run(source, &mut Workspace::new(g.node_count())))
}

/// Source-bin × target-bin averages of per-source reach values.
#[derive(Clone, Debug, PartialEq)]
pub struct ReachabilityMatrices {
    pub bins: BinningSpec,
    pub r: Vec<Vec<Option<f64>>>,
    pub l: Vec<Vec<Option<f64>>>,
    pub y: Vec<Vec<Option<f64>>>,
    pub sources_per_bin: Vec<usize>,
    pub sources: Vec<usize>,
}

/// Averages per-source values over `sources`, cell by cell; sources whose
/// value is undefined for a cell are left out of that cell.
pub fn aggregate_sources(per_source: &[SourceReach], bins: &BinningSpec) -> ReachabilityMatrices {
    let nb = bins.len();
    let mut sums = [vec![vec![0.0; nb]; nb], vec![vec![0.0; nb]; nb], vec![vec![0.0; nb]; nb]];
    let mut ns = [vec![vec![0usize; nb]; nb], vec![vec![0usize; nb]; nb], vec![vec![0usize; nb]; nb]];
    let mut sources_per_bin = vec![0usize; nb];
    for s in per_source {
        let i = s.source_bin;
        sources_per_bin[i] += 1;
        for (m, vals) in [&s.r, &s.l, &s.y].into_iter().enumerate() {
            for (j, v) in vals.iter().enumerate() {
                if let Some(v) = v {
                    sums[m][i][j] += v;
                    ns[m][i][j] += 1;
                }
            }
        }
    }
    let finish = |m: usize| -> Vec<Vec<Option<f64>>> {
        (0..nb)
            .map(|i| {
                (0..nb)
                    .map(|j| (ns[m][i][j] > 0).then(|| sums[m][i][j] / ns[m][i][j] as f64))
                    .collect()
            })
            .collect()
    };
    ReachabilityMatrices {
        bins: *bins,
        r: finish(0),
        l: finish(1),
        y: finish(2),
        sources_per_bin,
        sources: per_source.iter().map(|s| s.source).collect(),
    }
}

/// Samples `round(fraction · n)` sources without replacement and aggregates
/// their reach values. A fraction of 1 uses every node and ignores the seed.
pub fn aggregate_reach(
    g: &CitationGraph,
    sample_fraction: f64,
    bins: &BinningSpec,
    seed: u64,
) -> Result<ReachabilityMatrices> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample fraction {sample_fraction} outside (0, 1]"
        )));
    }
    let n = g.node_count();
    let k = if sample_fraction == 1.0 {
        n
    } else {
        (sample_fraction * n as f64).round() as usize
    };
    if k == 0 {
        return Err(Error::Empty("reachability sample is empty".into()));
    }
    let mut sources: Vec<usize> = if k == n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, n, k).into_vec()
    };
    sources.sort_unstable();

    let ctx = ReachContext::new(g, bins)?;
    let per_source: Vec<SourceReach> = sources
        .par_iter()
        .map_init(|| Workspace::new(n), |ws, &s| ctx.run(s, ws))
        .collect();
    Ok(aggregate_sources(&per_source, bins))
}

fn write_header(out: &mut impl Write, bins: &BinningSpec) -> std::io::Result<()> {
    write!(out, "bin")?;
    for m in bins.midpoints() {
        write!(out, "\t{}", fmt9(m))?;
    }
    writeln!(out)
}

/// Matrix TSV with bin-midpoint headers; undefined cells are `NA`.
pub fn write_matrix(path: &Path, bins: &BinningSpec, m: &[Vec<Option<f64>>]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    write_header(&mut out, bins).map_err(io)?;
    for (i, row) in m.iter().enumerate() {
        write!(out, "{}", fmt9(bins.midpoint(i))).map_err(io)?;
        for v in row {
            match v {
                Some(v) => write!(out, "\t{}", fmt9(*v)),
                None => write!(out, "\tNA"),
            }
            .map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_heatmap(path: &Path, bins: &BinningSpec, counts: &[Vec<u64>]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    write_header(&mut out, bins).map_err(io)?;
    for (i, row) in counts.iter().enumerate() {
        write!(out, "{}", fmt9(bins.midpoint(i))).map_err(io)?;
        for c in row {
            write!(out, "\t{c}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `pmid, score, μ` for every node with at least one reference.
pub fn write_mu(path: &Path, g: &CitationGraph) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for i in 0..g.node_count() {
        if let Some(mu) = mean_reference_diff(g, i)? {
            writeln!(out, "{}\t{}\t{}", g.pmid(i), fmt9(g.score(i)), fmt9(mu)).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
