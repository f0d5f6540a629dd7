use crate::error::{Error, Result};

/// Equal-width bins partitioning `[-1, 1]`; the last bin is closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinningSpec {
    width: f64,
    count: usize,
}

const EDGE_EPS: f64 = 1e-9;

impl BinningSpec {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 2.0) {
            return Err(Error::InvalidArgument(format!("bin width {width} outside (0, 2]")));
        }
        let count = (2.0 / width).round();
        if (count * width - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("bin width {width} does not divide 2 evenly")));
        }
        Ok(BinningSpec {
            width,
            count: count as usize,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Bin of `x`, or `None` outside `[-1, 1]`.
    pub fn index(&self, x: f64) -> Option<usize> {
        if !(-1.0 - EDGE_EPS..=1.0 + EDGE_EPS).contains(&x) {
            return None;
        }
        let k = ((x + 1.0) / self.width + EDGE_EPS).floor().max(0.0) as usize;
        Some(k.min(self.count - 1))
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        -1.0 + (k as f64 + 0.5) * self.width
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.midpoint(k)).collect()
    }
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec::new(0.1).unwrap()
    }
}
