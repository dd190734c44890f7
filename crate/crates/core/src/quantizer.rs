//! Uniform scalar quantization over a closed range.
//!
//! The codebook has `levels` equidistant points that include both range
//! endpoints. Inputs are mapped to the nearest point; exact midpoints go to
//! the larger neighbour and out-of-range inputs saturate to the nearest
//! endpoint, so quantization is total.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantizerSpec", into = "QuantizerSpec")]
pub struct Quantizer {
    levels: usize,
    range_lo: f64,
    range_hi: f64,
    step: f64,
    max_error: f64,
}

/// Serialized form: only the defining parameters, derived fields are rebuilt.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub levels: usize,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl TryFrom<QuantizerSpec> for Quantizer {
    type Error = Error;

    fn try_from(s: QuantizerSpec) -> Result<Self> {
        Quantizer::uniform(s.levels, s.range_lo, s.range_hi)
    }
}

impl From<Quantizer> for QuantizerSpec {
    fn from(q: Quantizer) -> Self {
        QuantizerSpec {
            levels: q.levels,
            range_lo: q.range_lo,
            range_hi: q.range_hi,
        }
    }
}

impl Quantizer {
    /// Uniform codebook with `levels` points spanning `[range_lo, range_hi]`.
    pub fn uniform(levels: usize, range_lo: f64, range_hi: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidQuantizer(format!(
                "need at least 2 levels, got {levels}"
            )));
        }
        if !(range_lo.is_finite() && range_hi.is_finite()) || range_lo >= range_hi {
            return Err(Error::InvalidQuantizer(format!(
                "empty range [{range_lo}, {range_hi}]"
            )));
        }
        let step = (range_hi - range_lo) / (levels - 1) as f64;
        Ok(Self {
            levels,
            range_lo,
            range_hi,
            step,
            max_error: step / 2.0,
        })
    }

    /// Symmetric range `[-r, r]`.
    pub fn symmetric(levels: usize, r: f64) -> Result<Self> {
        Self::uniform(levels, -r, r)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn range(&self) -> (f64, f64) {
        (self.range_lo, self.range_hi)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Worst-case error for inputs inside the range.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    /// Codebook point `i`; the last point is pinned to `range_hi`.
    pub fn level(&self, i: usize) -> f64 {
        assert!(i < self.levels, "level index {i} out of range");
        if i + 1 == self.levels {
            self.range_hi
        } else {
            self.range_lo + i as f64 * self.step
        }
    }

    pub fn codebook(&self) -> Vec<f64> {
        (0..self.levels).map(|i| self.level(i)).collect()
    }

    /// Index of the nearest codebook point. NaN maps to index 0.
    pub fn index_of(&self, v: f64) -> usize {
        let clamped = self.clamp(v);
        let t = (clamped - self.range_lo) / self.step;
        let idx = (t + 0.5).floor();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.levels - 1)
        }
    }

    pub fn quantize(&self, v: f64) -> f64 {
        self.level(self.index_of(v))
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.range_lo, self.range_hi)
    }

    pub fn saturates(&self, v: f64) -> bool {
        v < self.range_lo || v > self.range_hi
    }

    pub fn quantize_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        v.map(|e| self.quantize(e))
    }

    pub fn quantize_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.map(|e| self.quantize(e))
    }
}
