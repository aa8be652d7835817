//! Online min-max normalization with running per-dimension extremes.
//!
//! Each incoming value first widens the running range, then maps to
//! `(v - min) / (max - min)`, so outputs always land in `[0,1]` and the
//! first occurrence of a new extreme maps to 0 or 1. A dimension whose
//! range is still degenerate (min = max) maps to 0.5.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormState {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    count: u64,
}

impl NormState {
    pub fn new(dim: usize) -> Self {
        NormState { mins: vec![0.0; dim], maxs: vec![0.0; dim], count: 0 }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    /// Records seen so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Running `(min, max)` for one dimension, `None` before any record.
    pub fn range(&self, i: usize) -> Option<(f64, f64)> {
        (self.count > 0 && i < self.mins.len()).then(|| (self.mins[i], self.maxs[i]))
    }

    /// Fold one raw record into the running statistics and return its
    /// normalized form. A failed record leaves the state untouched.
    pub fn observe_and_normalize(&mut self, raw: &[f64]) -> Result<FeatureVector> {
        if raw.len() != self.mins.len() {
            return Err(Error::input(format!(
                "record has {} features, stream is configured for {}",
                raw.len(),
                self.mins.len()
            )));
        }
        if let Some((i, v)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::input(format!("feature {i} is not finite ({v})")));
        }
        if self.count == 0 {
            self.mins.copy_from_slice(raw);
            self.maxs.copy_from_slice(raw);
        } else {
            for (i, &v) in raw.iter().enumerate() {
                if v < self.mins[i] {
                    self.mins[i] = v;
                }
                if v > self.maxs[i] {
                    self.maxs[i] = v;
                }
            }
        }
        self.count += 1;
        let values = raw
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let span = self.maxs[i] - self.mins[i];
                if span == 0.0 {
                    0.5
                } else {
                    (v - self.mins[i]) / span
                }
            })
            .collect();
        FeatureVector::new(values)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.mins.len() != self.maxs.len() || self.mins.is_empty() {
            return Err(Error::snapshot("normalization state has inconsistent dimensions".to_string()));
        }
        if self.count > 0 {
            for (i, (lo, hi)) in self.mins.iter().zip(&self.maxs).enumerate() {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(Error::snapshot(format!(
                        "normalization range for dimension {i} is invalid ({lo}..{hi})"
                    )));
                }
            }
        }
        Ok(())
    }
}
