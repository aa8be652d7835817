//! The reduction gate: scores how novel an event looks against the map and
//! decides whether to forward it downstream as an antigen.
//!
//! Novelty blends two bounded ingredients: how far the event sits from its
//! best matching cell (saturating exponentially with `distance_scale`) and
//! how rarely that cell has been hit (`1 / (1 + hit_count)`). During the
//! warmup window nothing is emitted on novelty alone, because a freshly
//! seeded map makes everything look new; a sufficiently dangerous receptor
//! effect overrides warmup, since receptors encode predefined hazards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::receptor::TlrEffect;
use crate::som::{FeatureVector, GridCoord};

/// Per-event inputs to the novelty score, captured before the training
/// update so the event is judged against the map it arrived at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyInputs {
    pub bmu_distance: f64,
    pub bmu_hit_count: u64,
    /// Steps since the BMU last won, `None` if it never has. Not used by
    /// the default score; carried for offline analysis.
    pub steps_since_bmu_hit: Option<u64>,
    pub map_step: u64,
}

/// Gate thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// Distance scale D: the quantization error at which the distance term
    /// reaches 1 - 1/e.
    pub distance_scale: f64,
    /// Rarity weight lambda: how much of the score comes from hit rarity
    /// versus distance.
    pub rarity_weight: f64,
    /// Emission threshold theta.
    pub emit_threshold: f64,
    /// Danger override delta: receptor danger at or above this emits even
    /// during warmup.
    pub danger_override: f64,
    /// Events to process before novelty alone may emit.
    pub warmup_steps: u64,
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_scale.is_finite() && self.distance_scale > 0.0) {
            return Err(Error::config(format!(
                "gate.distance_scale must be positive, got {}",
                self.distance_scale
            )));
        }
        if !(0.0..=1.0).contains(&self.rarity_weight) {
            return Err(Error::config(format!(
                "gate.rarity_weight must be in [0,1], got {}",
                self.rarity_weight
            )));
        }
        if !(self.emit_threshold > 0.0 && self.emit_threshold < 1.0) {
            return Err(Error::config(format!(
                "gate.emit_threshold must be in (0,1), got {}",
                self.emit_threshold
            )));
        }
        if !(self.danger_override > 0.0 && self.danger_override <= 1.0) {
            return Err(Error::config(format!(
                "gate.danger_override must be in (0,1], got {}",
                self.danger_override
            )));
        }
        Ok(())
    }
}

/// The record forwarded downstream for an interesting event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntigenEvent {
    pub ts: i64,
    pub source: String,
    pub bmu: GridCoord,
    pub novelty: f64,
    pub danger: f64,
    pub active_receptors: Vec<String>,
    pub features: FeatureVector,
    pub inflammation_at_bmu: f64,
}

/// Everything an emitted antigen carries besides the scores themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct AntigenContext {
    pub ts: i64,
    pub source: String,
    pub bmu: GridCoord,
    pub active_receptors: Vec<String>,
    pub features: FeatureVector,
    pub inflammation_at_bmu: f64,
}

/// Novelty in `[0,1]`:
/// `lambda * 1/(1 + hits) + (1 - lambda) * (1 - exp(-distance / D))`.
///
/// Monotone non-decreasing in distance, non-increasing in hit count.
pub fn novelty_score(inputs: &NoveltyInputs, cfg: &GateConfig) -> f64 {
    let rarity = 1.0 / (1.0 + inputs.bmu_hit_count as f64);
    let dist_term = 1.0 - (-inputs.bmu_distance / cfg.distance_scale).exp();
    let score = cfg.rarity_weight * rarity + (1.0 - cfg.rarity_weight) * dist_term;
    score.clamp(0.0, 1.0)
}

/// Emission decision. During warmup only a danger at or above the override
/// emits; afterwards an event emits when novelty reaches the threshold or
/// danger reaches the override.
pub fn decide(
    novelty: f64,
    effect: &TlrEffect,
    map_step: u64,
    cfg: &GateConfig,
    ctx: AntigenContext,
) -> Option<AntigenEvent> {
    let dangerous = effect.danger >= cfg.danger_override;
    let emit = if map_step < cfg.warmup_steps {
        dangerous
    } else {
        novelty >= cfg.emit_threshold || dangerous
    };
    if !emit {
        return None;
    }
    Some(AntigenEvent {
        ts: ctx.ts,
        source: ctx.source,
        bmu: ctx.bmu,
        novelty,
        danger: effect.danger,
        active_receptors: ctx.active_receptors,
        features: ctx.features,
        inflammation_at_bmu: ctx.inflammation_at_bmu,
    })
}
