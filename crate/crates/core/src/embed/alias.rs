//! Walker/Vose alias tables for O(1) weighted draws.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "alias weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(Error::InvalidArgument(
                "alias table needs at least one positive weight".into(),
            ));
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut accept = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&k| scaled[k] < 1.0);

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            accept[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for k in small.into_iter().chain(large) {
            accept[k] = 1.0;
        }
        Ok(AliasTable { accept, alias })
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let col = rng.random_range(0..self.accept.len());
        if rng.random::<f64>() < self.accept[col] {
            col
        } else {
            self.alias[col]
        }
    }

    /// Sampling probability of every item implied by the table.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut p: Vec<f64> = self.accept.iter().map(|a| a / n).collect();
        for (k, &a) in self.accept.iter().enumerate() {
            if a < 1.0 {
                p[self.alias[k]] += (1.0 - a) / n;
            }
        }
        p
    }
}
