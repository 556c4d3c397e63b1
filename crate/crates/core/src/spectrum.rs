use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a spectrum came from: the dimensions needed to rescale it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumMeta {
    Cca { k: usize, m: usize, s: usize },
    Coint { k: usize, t: usize },
    Manova { k: usize, l: usize, q: usize },
    Unknown,
}

/// Squared canonical correlations in `[0, 1]`, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    /// Sorts `values` descending and checks the range.
    pub fn new(mut values: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::CorrelationOutOfRange { value: v });
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values, meta })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> Option<f64> {
        self.values.first().copied()
    }
}
