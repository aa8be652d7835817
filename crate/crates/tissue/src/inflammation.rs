//! Inflammation: a decaying intensity field over the tissue grid.
//!
//! Every emitted antigen deposits intensity at its BMU (optionally spread
//! over a Gaussian neighborhood), and every processed event decays the
//! whole field geometrically. The hottest cells mark where alarms have
//! been concentrating lately, which the attention report turns into an
//! advisory priority share for downstream consumers. Decay is per event,
//! not wall clock, so replays are deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::GridCoord;

/// Non-negative per-cell intensity, capped at `cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflammationField {
    width: usize,
    height: usize,
    levels: Vec<f64>,
    decay: f64,
    cap: f64,
    spread_sigma: f64,
}

/// One hot cell in an attention report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    #[serde(flatten)]
    pub coord: GridCoord,
    pub level: f64,
}

/// The advisory attention signal: hottest cells plus a recommended share
/// of downstream bandwidth. Never touches any real process priority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionReport {
    pub hotspots: Vec<Hotspot>,
    pub priority_share: f64,
}

impl InflammationField {
    pub fn new(width: usize, height: usize, decay: f64, cap: f64, spread_sigma: f64) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::config(format!(
                "field dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::config(format!("inflammation.decay must be in (0,1), got {decay}")));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::config(format!("inflammation.cap must be positive, got {cap}")));
        }
        if !(spread_sigma.is_finite() && spread_sigma >= 0.0) {
            return Err(Error::config(format!(
                "inflammation.spread_sigma must be >= 0, got {spread_sigma}"
            )));
        }
        Ok(InflammationField { width, height, levels: vec![0.0; width * height], decay, cap, spread_sigma })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn level_at(&self, coord: GridCoord) -> f64 {
        self.index_of(coord).map_or(0.0, |i| self.levels[i])
    }

    fn index_of(&self, coord: GridCoord) -> Option<usize> {
        (coord.row < self.height && coord.col < self.width).then(|| coord.row * self.width + coord.col)
    }

    /// Sum of all levels.
    pub fn total_mass(&self) -> f64 {
        self.levels.iter().sum()
    }

    /// Add `amount` at `coord`, spread over the grid by a Gaussian kernel
    /// of width `spread_sigma` (zero sigma puts everything on the single
    /// cell). Levels clamp at the cap.
    pub fn deposit(&mut self, coord: GridCoord, amount: f64) -> Result<()> {
        let center = self.index_of(coord).ok_or_else(|| {
            Error::input(format!(
                "deposit coordinate {coord} outside {}x{} grid",
                self.height, self.width
            ))
        })?;
        if !(amount.is_finite() && amount >= 0.0) {
            return Err(Error::input(format!("deposit amount must be >= 0, got {amount}")));
        }
        if self.spread_sigma == 0.0 {
            self.levels[center] = (self.levels[center] + amount).min(self.cap);
            return Ok(());
        }
        let two_sigma_sq = 2.0 * self.spread_sigma * self.spread_sigma;
        for row in 0..self.height {
            for col in 0..self.width {
                let cell = GridCoord::new(row, col);
                let gain = amount * (-cell.grid_dist_sq(coord) / two_sigma_sq).exp();
                let i = row * self.width + col;
                self.levels[i] = (self.levels[i] + gain).min(self.cap);
            }
        }
        Ok(())
    }

    /// Multiply every level by the decay factor.
    pub fn step_decay(&mut self) {
        for level in &mut self.levels {
            *level *= self.decay;
        }
    }

    /// Up to `k` cells with level strictly above `floor`, hottest first
    /// (ties resolve row-major), plus the recommended priority share
    /// `min(1, sum of hotspot levels / (k * cap))`.
    pub fn attention(&self, k: usize, floor: f64) -> AttentionReport {
        let k = k.max(1);
        let mut hot: Vec<Hotspot> = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let level = self.levels[row * self.width + col];
                if level > floor {
                    hot.push(Hotspot { coord: GridCoord::new(row, col), level });
                }
            }
        }
        hot.sort_by(|a, b| {
            b.level.partial_cmp(&a.level).expect("levels are finite").then(a.coord.cmp(&b.coord))
        });
        hot.truncate(k);
        let sum = hot.iter().fold(0.0, |acc, h| acc + h.level);
        let priority_share = (sum / (k as f64 * self.cap)).min(1.0);
        AttentionReport { hotspots: hot, priority_share }
    }

    /// Write the field as CSV: `row,col,level`, row-major.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "row,col,level")?;
        for row in 0..self.height {
            for col in 0..self.width {
                writeln!(out, "{},{},{}", row, col, self.levels[row * self.width + col])?;
            }
        }
        Ok(())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.levels.len() != self.width * self.height {
            return Err(Error::snapshot("field size does not match its dimensions".to_string()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0 && self.cap > 0.0 && self.spread_sigma >= 0.0) {
            return Err(Error::snapshot("field parameters out of range".to_string()));
        }
        for level in &self.levels {
            if !level.is_finite() || *level < 0.0 || *level > self.cap {
                return Err(Error::snapshot(format!("field level {level} outside [0, cap]")));
            }
        }
        Ok(())
    }
}
