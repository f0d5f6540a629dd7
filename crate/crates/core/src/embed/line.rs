//! First-order LINE: edge sampling with negative-sampling SGD.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alias::AliasTable;
use super::TermEmbedding;
use crate::cooccur::CooccurrenceMatrix;
use crate::corpus::TermId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingParams {
    pub dim: usize,
    /// Number of sampled edges; `None` means 100 per matrix entry.
    pub total_samples: Option<u64>,
    pub negatives: usize,
    pub initial_rate: f64,
    pub noise_exponent: f64,
    pub seed: u64,
    /// Worker count. With more than one worker, rows are updated without
    /// synchronization and results are not reproducible.
    pub threads: usize,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: 10,
            total_samples: None,
            negatives: 5,
            initial_rate: 0.025,
            noise_exponent: 0.75,
            seed: 1,
            threads: 1,
        }
    }
}

pub const SAMPLES_PER_EDGE: u64 = 100;
const RATE_FLOOR: f64 = 1e-4;

impl EmbeddingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("embedding dimension must be >= 1");
        }
        if self.total_samples == Some(0) {
            return bad("total samples must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives per edge must be >= 1");
        }
        if !(self.initial_rate > 0.0 && self.initial_rate.is_finite()) {
            return bad("initial learning rate must be positive");
        }
        if !self.noise_exponent.is_finite() {
            return bad("noise exponent must be finite");
        }
        if self.threads == 0 {
            return bad("threads must be >= 1");
        }
        Ok(())
    }

    pub fn samples_for(&self, m: &CooccurrenceMatrix) -> u64 {
        self.total_samples
            .unwrap_or(SAMPLES_PER_EDGE * m.len() as u64)
            .max(1)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    // Stable for large |x|.
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Edge and noise samplers over the rows of a window's vocabulary.
struct Samplers {
    vocab: Vec<TermId>,
    edges: Vec<(usize, usize)>,
    edge_table: AliasTable,
    noise_table: AliasTable,
}

impl Samplers {
    fn new(m: &CooccurrenceMatrix, noise_exponent: f64) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Empty(format!(
                "co-occurrence matrix for window {} has no entries",
                m.window_end
            )));
        }
        let vocab = m.vocabulary();
        let row = |t: TermId| vocab.binary_search(&t).unwrap();
        let edges: Vec<(usize, usize)> = m.entries().iter().map(|&(i, j, _)| (row(i), row(j))).collect();
        let weights: Vec<f64> = m.entries().iter().map(|e| e.2 as f64).collect();
        let degrees = m.degrees();
        let noise: Vec<f64> = vocab
            .iter()
            .map(|t| (degrees[t] as f64).powf(noise_exponent))
            .collect();
        Ok(Samplers {
            edge_table: AliasTable::new(&weights)?,
            noise_table: AliasTable::new(&noise)?,
            vocab,
            edges,
        })
    }

    /// Draws an edge and orients it uniformly, so both endpoints act as source.
    #[inline]
    fn edge<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let (a, b) = self.edges[self.edge_table.sample(rng)];
        if rng.random::<bool>() {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Row-major parameter matrix shared between workers. Individual `f64`
/// components are read and written atomically with relaxed ordering; whole
/// rows are not, which is the usual lock-free SGD trade-off.
struct SharedRows {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedRows {
    fn from_vec(dim: usize, values: Vec<f64>) -> Self {
        SharedRows {
            dim,
            cells: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    #[inline]
    fn read(&self, row: usize, out: &mut [f64]) {
        let base = row * self.dim;
        for (k, o) in out.iter_mut().enumerate() {
            *o = f64::from_bits(self.cells[base + k].load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn write(&self, row: usize, values: &[f64]) {
        let base = row * self.dim;
        for (k, v) in values.iter().enumerate() {
            self.cells[base + k].store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vec(self) -> Vec<f64> {
        self.cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }
}

fn worker_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform initialization in `[-0.5/d, 0.5/d]` over the matrix vocabulary.
pub fn initial_embedding(m: &CooccurrenceMatrix, params: &EmbeddingParams) -> Result<TermEmbedding> {
    params.validate()?;
    if m.is_empty() {
        return Err(Error::Empty(format!(
            "co-occurrence matrix for window {} has no entries",
            m.window_end
        )));
    }
    let vocab = m.vocabulary();
    let d = params.dim;
    let mut rng = worker_rng(params.seed, 0);
    let half = 0.5 / d as f64;
    let vectors: Vec<f64> = (0..vocab.len() * d)
        .map(|_| rng.random_range(-half..=half))
        .collect();
    TermEmbedding::from_rows(m.window_end, d, vocab, vectors)
}

fn run_worker(
    rows: &SharedRows,
    samplers: &Samplers,
    params: &EmbeddingParams,
    samples: u64,
    mut rng: ChaCha8Rng,
) {
    let d = params.dim;
    let mut src = vec![0.0; d];
    let mut tgt = vec![0.0; d];
    let mut err = vec![0.0; d];
    let rho0 = params.initial_rate;
    for s in 0..samples {
        let rate = (rho0 * (1.0 - s as f64 / samples as f64)).max(rho0 * RATE_FLOOR);
        let (u, v) = samplers.edge(&mut rng);
        rows.read(u, &mut src);
        err.iter_mut().for_each(|e| *e = 0.0);
        for k in 0..=params.negatives {
            let (target, label) = if k == 0 {
                (v, 1.0)
            } else {
                (samplers.noise_table.sample(&mut rng), 0.0)
            };
            rows.read(target, &mut tgt);
            let g = (label - sigmoid(dot(&src, &tgt))) * rate;
            for c in 0..d {
                err[c] += g * tgt[c];
                tgt[c] += g * src[c];
            }
            rows.write(target, &tgt);
        }
        // Re-read: a negative may have been the source row itself.
        rows.read(u, &mut src);
        for c in 0..d {
            src[c] += err[c];
        }
        rows.write(u, &src);
    }
}

/// Trains first-order LINE vectors for one window.
///
/// Each step draws an edge with probability proportional to its count,
/// ascends `log σ(v_i·v_j) + Σ_k log σ(−v_i·v_{n_k})` with `K` noise terms
/// drawn from `degree^noise_exponent`, and decays the rate linearly down to
/// `1e-4` of its initial value. Single-worker runs are bit-reproducible.
pub fn train_line(m: &CooccurrenceMatrix, params: &EmbeddingParams) -> Result<TermEmbedding> {
    let init = initial_embedding(m, params)?;
    let samplers = Samplers::new(m, params.noise_exponent)?;
    let total = params.samples_for(m);
    let rows = SharedRows::from_vec(params.dim, init.vectors);

    let workers = params.threads.max(1) as u64;
    if workers == 1 {
        run_worker(&rows, &samplers, params, total, worker_rng(params.seed, 1));
    } else {
        std::thread::scope(|scope| {
            for w in 0..workers {
                let share = total / workers + u64::from(w < total % workers);
                let (rows, samplers) = (&rows, &samplers);
                scope.spawn(move || {
                    run_worker(rows, samplers, params, share, worker_rng(params.seed, w + 1))
                });
            }
        });
    }

    let vectors = rows.into_vec();
    if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
        let term = samplers.vocab[pos / params.dim];
        return Err(Error::Numeric(format!(
            "non-finite component {} of term {} in window {} (rate {}, samples {})",
            pos % params.dim,
            term,
            m.window_end,
            params.initial_rate,
            total
        )));
    }
    TermEmbedding::from_rows(m.window_end, params.dim, samplers.vocab, vectors)
}

/// Mean negative-sampling objective per edge.
///
/// When `sample_size` covers every matrix entry the value is exact: the
/// count-weighted mean over both orientations of every edge, with the noise
/// term replaced by its expectation. Otherwise edges and noise are sampled.
pub fn loss_estimate(
    emb: &TermEmbedding,
    m: &CooccurrenceMatrix,
    params: &EmbeddingParams,
    sample_size: usize,
    seed: u64,
) -> Result<f64> {
    if sample_size == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let samplers = Samplers::new(m, params.noise_exponent)?;
    let vec_of = |row: usize| -> Result<&[f64]> {
        let t = samplers.vocab[row];
        emb.get(t).ok_or(Error::UnknownTerm(t))
    };
    let k = params.negatives as f64;

    if sample_size >= m.len() {
        let noise = samplers.noise_table.implied_probabilities();
        let expected_noise = |u: &[f64]| -> Result<f64> {
            let mut acc = 0.0;
            for (row, p) in noise.iter().enumerate() {
                acc += p * log_sigmoid(-dot(u, vec_of(row)?));
            }
            Ok(acc)
        };
        let total_w = m.total_weight() as f64;
        let mut acc = 0.0;
        for (&(a, b), &(_, _, w)) in samplers.edges.iter().zip(m.entries()) {
            let (va, vb) = (vec_of(a)?, vec_of(b)?);
            let pos = log_sigmoid(dot(va, vb));
            let neg = 0.5 * (expected_noise(va)? + expected_noise(vb)?);
            acc += w as f64 * (pos + k * neg);
        }
        return Ok(acc / total_w);
    }

    let mut rng = worker_rng(seed, u64::MAX);
    let mut acc = 0.0;
    for _ in 0..sample_size {
        let (u, v) = samplers.edge(&mut rng);
        let vu = vec_of(u)?;
        let mut obj = log_sigmoid(dot(vu, vec_of(v)?));
        for _ in 0..params.negatives {
            obj += log_sigmoid(-dot(vu, vec_of(samplers.noise_table.sample(&mut rng))?));
        }
        acc += obj;
    }
    Ok(acc / sample_size as f64)
}
