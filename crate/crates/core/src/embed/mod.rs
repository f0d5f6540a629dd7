//! Term embeddings per window.

pub mod alias;
pub mod line;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub use alias::AliasTable;
pub use line::{initial_embedding, loss_estimate, train_line, EmbeddingParams};

use crate::corpus::{MeshVocabulary, TermId};
use crate::error::{Error, Result};
use crate::numfmt::fmt9;

/// Vectors of one window, rows ordered by ascending term id.
#[derive(Clone, Debug, PartialEq)]
pub struct TermEmbedding {
    pub window_end: i32,
    dim: usize,
    terms: Vec<TermId>,
    pub(crate) vectors: Vec<f64>,
}

impl TermEmbedding {
    pub fn from_rows(window_end: i32, dim: usize, terms: Vec<TermId>, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be >= 1".into()));
        }
        if vectors.len() != terms.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} terms of dimension {dim}",
                vectors.len(),
                terms.len()
            )));
        }
        if !terms.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("embedding terms must be strictly ascending".into()));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite vector in window {window_end}")));
        }
        Ok(TermEmbedding {
            window_end,
            dim,
            terms,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[TermId] {
        &self.terms
    }

    pub fn contains(&self, term: TermId) -> bool {
        self.terms.binary_search(&term).is_ok()
    }

    pub fn get(&self, term: TermId) -> Option<&[f64]> {
        let row = self.terms.binary_search(&term).ok()?;
        Some(&self.vectors[row * self.dim..(row + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, &[f64])> {
        self.terms.iter().copied().zip(self.vectors.chunks_exact(self.dim))
    }

    /// Applies `f` to every vector, e.g. a rotation of the whole space.
    pub fn map_vectors(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut vectors = Vec::with_capacity(self.vectors.len());
        for row in self.vectors.chunks_exact(self.dim) {
            let out = f(row);
            if out.len() != self.dim {
                return Err(Error::InvalidArgument("mapped vector changed dimension".into()));
            }
            vectors.extend(out);
        }
        TermEmbedding::from_rows(self.window_end, self.dim, self.terms.clone(), vectors)
    }
}

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::Numeric("cosine similarity of a zero-norm vector".into()));
    }
    Ok((uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Per-window training seed derived from the run seed (SplitMix64 finalizer).
pub fn window_seed(seed: u64, window_end: i32) -> u64 {
    let mut z = seed ^ (window_end as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn embedding_file_name(t: i32) -> String {
    format!("emb_{t}.tsv")
}

/// Writes `#d=<d> seed=<seed>` then `term<TAB>v1..vd` rows.
pub fn write_embedding(path: &Path, emb: &TermEmbedding, vocab: &MeshVocabulary, seed: u64) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "#d={} seed={}", emb.dim, seed).map_err(io)?;
    for (term, v) in emb.iter() {
        out.write_all(vocab.name(term)?.as_bytes()).map_err(io)?;
        for x in v {
            write!(out, "\t{}", fmt9(*x)).map_err(io)?;
        }
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads an embedding file; returns the embedding and the recorded seed.
pub fn read_embedding(path: &Path, vocab: &MeshVocabulary, window_end: i32) -> Result<(TermEmbedding, u64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let (dim, seed) = parse_header(&header).ok_or_else(|| Error::parse(path, 1, "expected `#d=<d> seed=<seed>`"))?;

    let mut rows: Vec<(TermId, Vec<f64>)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut cols = line.split('\t');
        let name = cols.next().unwrap_or_default();
        let term = vocab
            .id(name)
            .ok_or_else(|| Error::parse(path, lineno, format!("unknown term {name:?}")))?;
        let v: Vec<f64> = cols
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, lineno, "bad float"))?;
        if v.len() != dim {
            return Err(Error::parse(path, lineno, format!("expected {dim} components")));
        }
        rows.push((term, v));
    }
    rows.sort_by_key(|r| r.0);
    let terms = rows.iter().map(|r| r.0).collect();
    let vectors = rows.into_iter().flat_map(|r| r.1).collect();
    Ok((TermEmbedding::from_rows(window_end, dim, terms, vectors)?, seed))
}

fn parse_header(h: &str) -> Option<(usize, u64)> {
    let rest = h.strip_prefix("#d=")?;
    let (d, seed) = rest.split_once(" seed=")?;
    Some((d.parse().ok()?, seed.trim().parse().ok()?))
}
