//! The tissue grid: a rectangular self-organizing map trained online.
//!
//! Each grid cell holds a weight vector in `[0,1]^d` plus hit statistics
//! (how often and how recently it won, and how much it has grown). Training
//! never stops: the learning rate and neighborhood radius decay
//! exponentially with the number of processed events but are clamped at
//! configurable floors, so the map keeps tracking the stream indefinitely.
//!
//! Determinism: weight initialization draws from a ChaCha8 stream seeded
//! with a caller-supplied integer, iterating cells in row-major order and
//! weight components in index order. Identical `(width, height, dim,
//! schedule, seed)` always produce bit-identical grids.

use serde::{Deserialize, Serialize};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Position of a cell on the grid. Ordering is row-major: `(row, col)`
/// lexicographic, which is also the tie-break order used everywhere.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct GridCoord {
    pub row: usize,
    pub col: usize,
}

impl GridCoord {
    pub fn new(row: usize, col: usize) -> Self {
        GridCoord { row, col }
    }

    /// Squared Euclidean distance between two grid positions (bounded,
    /// non-toroidal grid).
    pub fn grid_dist_sq(self, other: GridCoord) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr * dr + dc * dc
    }
}

impl std::fmt::Display for GridCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A normalized input reading: `d` finite components, each in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("feature vector must have at least one component"));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(v) {
                return Err(Error::input(format!(
                    "feature component {i} is {v}, expected a finite value in [0,1]"
                )));
            }
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(x: FeatureVector) -> Vec<f64> {
        x.0
    }
}

/// Decay schedule for the learning rate and neighborhood radius.
///
/// Both decay as `v0 * exp(-step / tau)` and clamp at their floors, so the
/// map is never frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub alpha0: f64,
    pub alpha_min: f64,
    pub sigma0: f64,
    pub sigma_min: f64,
    pub tau: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha0", self.alpha0),
            ("alpha_min", self.alpha_min),
            ("sigma0", self.sigma0),
            ("sigma_min", self.sigma_min),
            ("tau", self.tau),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(format!("schedule.{name} must be finite, got {v}")));
            }
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha0 && self.alpha0 <= 1.0) {
            return Err(Error::config(format!(
                "schedule requires 0 < alpha_min <= alpha0 <= 1, got alpha_min={} alpha0={}",
                self.alpha_min, self.alpha0
            )));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma0) {
            return Err(Error::config(format!(
                "schedule requires 0 < sigma_min <= sigma0, got sigma_min={} sigma0={}",
                self.sigma_min, self.sigma0
            )));
        }
        if self.tau <= 0.0 {
            return Err(Error::config(format!("schedule.tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { alpha0: 0.5, alpha_min: 0.01, sigma0: 3.0, sigma_min: 0.5, tau: 1000.0 }
    }
}

/// One grid cell: weights plus hit statistics.
///
/// `hit_count` and `cumulative_growth` only ever increase over a run;
/// `last_hit_step` records the step index at which the cell last won.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub coord: GridCoord,
    pub weights: Vec<f64>,
    pub hit_count: u64,
    pub last_hit_step: Option<u64>,
    pub cumulative_growth: f64,
}

impl Cell {
    fn dist_sq_to(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, v)| {
                let d = w - v;
                d * d
            })
            .sum()
    }
}

/// Outcome of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub bmu: GridCoord,
    /// Quantization error: distance from the input to the BMU weights
    /// *before* the update.
    pub bmu_distance: f64,
    /// L2 norm of the concatenated weight deltas across the whole grid.
    pub growth_magnitude: f64,
    /// Effective learning rate actually applied (after the receptor
    /// multiplier and the clamp to [0,1]).
    pub alpha_eff: f64,
    pub sigma_eff: f64,
}

/// The 2D grid of cells, trained one event at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TissueMap {
    width: usize,
    height: usize,
    dim: usize,
    step: u64,
    schedule: Schedule,
    cells: Vec<Cell>,
}

impl TissueMap {
    /// Build a grid with weights drawn uniformly from `[0,1)^d` by a
    /// ChaCha8 generator seeded with `seed`. Cells are initialized in
    /// row-major order, components in index order, so the layout of the
    /// random stream is part of the format.
    pub fn new(width: usize, height: usize, dim: usize, schedule: Schedule, seed: u64) -> Result<Self> {
        if width < 1 || height < 1 || dim < 1 {
            return Err(Error::config(format!(
                "grid dimensions must all be >= 1, got width={width} height={height} dim={dim}"
            )));
        }
        schedule.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let weights = (0..dim).map(|_| rng.random::<f64>()).collect();
                cells.push(Cell {
                    coord: GridCoord::new(row, col),
                    weights,
                    hit_count: 0,
                    last_hit_step: None,
                    cumulative_growth: 0.0,
                });
            }
        }
        Ok(TissueMap { width, height, dim, step: 0, schedule, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of training steps performed so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, coord: GridCoord) -> Option<&Cell> {
        self.index_of(coord).map(|i| &self.cells[i])
    }

    fn index_of(&self, coord: GridCoord) -> Option<usize> {
        (coord.row < self.height && coord.col < self.width).then(|| coord.row * self.width + coord.col)
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::input(format!(
                "feature vector has dimension {}, map expects {}",
                x.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Find the best matching unit: the cell whose weights minimize the
    /// Euclidean distance to `x`. Ties resolve to the smallest `(row, col)`
    /// in row-major order.
    pub fn find_bmu(&self, x: &FeatureVector) -> Result<(GridCoord, f64)> {
        self.check_dim(x)?;
        let mut best = self.cells[0].coord;
        let mut best_d2 = self.cells[0].dist_sq_to(x.values());
        for cell in &self.cells[1..] {
            let d2 = cell.dist_sq_to(x.values());
            if d2 < best_d2 {
                best = cell.coord;
                best_d2 = d2;
            }
        }
        Ok((best, best_d2.sqrt()))
    }

    /// Learning rate and neighborhood radius for the current step:
    /// `max(floor, v0 * exp(-step / tau))` for both.
    pub fn schedule_params(&self) -> (f64, f64) {
        let s = &self.schedule;
        let decay = (-(self.step as f64) / s.tau).exp();
        let alpha = (s.alpha0 * decay).max(s.alpha_min);
        let sigma = (s.sigma0 * decay).max(s.sigma_min);
        (alpha, sigma)
    }

    /// One online update: pull every cell toward `x` by
    /// `a * h(c) * (x - w)` where `h` is a Gaussian over grid distance from
    /// the BMU and `a = clamp(alpha_eff_base * learn_multiplier, 0, 1)`.
    ///
    /// Each component update is clamped to the interval spanned by the old
    /// weight and the input, which pins down the contraction and
    /// domain-closure invariants even at the edge of f64 rounding.
    pub fn train_step(&mut self, x: &FeatureVector, learn_multiplier: f64) -> Result<UpdateReport> {
        self.check_dim(x)?;
        if !learn_multiplier.is_finite() || learn_multiplier < 0.0 {
            return Err(Error::input(format!(
                "learn_multiplier must be finite and >= 0, got {learn_multiplier}"
            )));
        }
        let (bmu, bmu_distance) = self.find_bmu(x)?;
        let (alpha_base, sigma_eff) = self.schedule_params();
        let rate = (alpha_base * learn_multiplier).clamp(0.0, 1.0);
        let two_sigma_sq = 2.0 * sigma_eff * sigma_eff;

        let mut growth_sq_total = 0.0;
        for cell in &mut self.cells {
            let gain = rate * (-cell.coord.grid_dist_sq(bmu) / two_sigma_sq).exp();
            if gain == 0.0 {
                continue;
            }
            let mut cell_growth_sq = 0.0;
            for (w, &xi) in cell.weights.iter_mut().zip(x.values()) {
                let lo = w.min(xi);
                let hi = w.max(xi);
                let updated = (*w + gain * (xi - *w)).clamp(lo, hi);
                let delta = updated - *w;
                *w = updated;
                cell_growth_sq += delta * delta;
            }
            cell.cumulative_growth += cell_growth_sq.sqrt();
            growth_sq_total += cell_growth_sq;
        }

        let idx = self.index_of(bmu).expect("BMU is on the grid");
        self.cells[idx].hit_count += 1;
        self.cells[idx].last_hit_step = Some(self.step);
        let report = UpdateReport {
            bmu,
            bmu_distance,
            growth_magnitude: growth_sq_total.sqrt(),
            alpha_eff: rate,
            sigma_eff,
        };
        self.step += 1;
        Ok(report)
    }

    /// Write the grid as CSV: header
    /// `row,col,w0..w{d-1},hit_count,last_hit_step,cumulative_growth`, one
    /// row per cell in row-major order. A cell never chosen as BMU gets
    /// `last_hit_step` of -1.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "row,col")?;
        for i in 0..self.dim {
            write!(out, ",w{i}")?;
        }
        writeln!(out, ",hit_count,last_hit_step,cumulative_growth")?;
        for cell in &self.cells {
            write!(out, "{},{}", cell.coord.row, cell.coord.col)?;
            for w in &cell.weights {
                write!(out, ",{w}")?;
            }
            let last = cell.last_hit_step.map_or(-1, |s| s as i64);
            writeln!(out, ",{},{},{}", cell.hit_count, last, cell.cumulative_growth)?;
        }
        Ok(())
    }

    /// Structural checks used when restoring a map from a snapshot.
    pub(crate) fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 || self.dim < 1 {
            return Err(Error::snapshot("map has degenerate dimensions".to_string()));
        }
        self.schedule.validate().map_err(|e| Error::snapshot(e.to_string()))?;
        if self.cells.len() != self.width * self.height {
            return Err(Error::snapshot(format!(
                "map has {} cells, expected {}",
                self.cells.len(),
                self.width * self.height
            )));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            let expected = GridCoord::new(i / self.width, i % self.width);
            if cell.coord != expected {
                return Err(Error::snapshot(format!(
                    "cell {i} has coordinate {}, expected {expected}",
                    cell.coord
                )));
            }
            if cell.weights.len() != self.dim {
                return Err(Error::snapshot(format!("cell {} has wrong weight dimension", cell.coord)));
            }
            if cell.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::snapshot(format!("cell {} has non-finite weights", cell.coord)));
            }
            if !cell.cumulative_growth.is_finite() || cell.cumulative_growth < 0.0 {
                return Err(Error::snapshot(format!("cell {} has invalid growth", cell.coord)));
            }
        }
        Ok(())
    }
}
