//! The sequential event loop that owns all mutable state.
//!
//! Per event, in order: normalize, evaluate receptors, find the BMU and
//! score novelty against the map as it stands, decide emission, then train
//! the map (so an anomaly never absorbs itself before being judged),
//! deposit inflammation for emitted events, and decay the field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gate::{decide, novelty_score, AntigenContext, AntigenEvent, GateConfig, NoveltyInputs};
use crate::inflammation::{Hotspot, InflammationField};
use crate::pipeline::config::PipelineConfig;
use crate::pipeline::normalize::NormState;
use crate::pipeline::snapshot::Snapshot;
use crate::pipeline::RawEvent;
use crate::receptor::TlrRuleSet;
use crate::som::TissueMap;

/// Emission counts for one label value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub events: u64,
    pub emitted: u64,
}

/// Mutable run counters; saved in snapshots so a resumed run continues its
/// accounting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunCounters {
    pub events_ingested: u64,
    pub events_processed: u64,
    pub events_skipped: u64,
    pub antigens_emitted: u64,
    epoch_qe_sum: f64,
    epoch_qe_count: u64,
    mqe_per_epoch: Vec<f64>,
    per_label: BTreeMap<String, LabelCounts>,
}

/// The metrics document written at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub events_ingested: u64,
    pub events_processed: u64,
    pub events_skipped: u64,
    pub antigens_emitted: u64,
    /// Emitted antigens over ingested events; 0 on an empty run.
    pub reduction_ratio: f64,
    pub epoch_len: u64,
    /// Mean quantization error per epoch of processed events, including
    /// the trailing partial epoch.
    pub mqe_per_epoch: Vec<f64>,
    pub hotspots: Vec<Hotspot>,
    pub priority_share: f64,
    pub per_label: BTreeMap<String, LabelCounts>,
}

pub struct Pipeline {
    ruleset: TlrRuleSet,
    gate: GateConfig,
    epoch_len: u64,
    attention_k: usize,
    attention_floor: f64,
    map: TissueMap,
    norm: NormState,
    field: InflammationField,
    counters: RunCounters,
}

impl Pipeline {
    /// Build a fresh pipeline: validated config, seeded map, empty
    /// normalization state and a cold inflammation field.
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let map = TissueMap::new(
            cfg.grid.width,
            cfg.grid.height,
            cfg.grid.dim,
            cfg.schedule,
            cfg.seed,
        )?;
        let field = InflammationField::new(
            cfg.grid.width,
            cfg.grid.height,
            cfg.inflammation.decay,
            cfg.inflammation.cap,
            cfg.inflammation.spread_sigma,
        )?;
        Ok(Pipeline {
            ruleset: cfg.receptors.clone(),
            gate: cfg.gate,
            epoch_len: cfg.metrics.epoch_len,
            attention_k: cfg.inflammation.attention_k,
            attention_floor: cfg.inflammation.attention_floor,
            map,
            norm: NormState::new(cfg.grid.dim),
            field,
            counters: RunCounters::default(),
        })
    }

    /// Resume from a snapshot, keeping the config's immutable parts.
    pub fn from_snapshot(cfg: &PipelineConfig, snapshot: Snapshot) -> Result<Self> {
        cfg.validate()?;
        snapshot.check_compatible(&cfg.grid)?;
        Ok(Pipeline {
            ruleset: cfg.receptors.clone(),
            gate: cfg.gate,
            epoch_len: cfg.metrics.epoch_len,
            attention_k: cfg.inflammation.attention_k,
            attention_floor: cfg.inflammation.attention_floor,
            map: snapshot.map,
            norm: snapshot.norm,
            field: snapshot.field,
            counters: snapshot.counters,
        })
    }

    /// Capture the full mutable state.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(
            self.map.clone(),
            self.norm.clone(),
            self.field.clone(),
            self.counters.clone(),
        )
    }

    pub fn map(&self) -> &TissueMap {
        &self.map
    }

    pub fn field(&self) -> &InflammationField {
        &self.field
    }

    pub fn norm(&self) -> &NormState {
        &self.norm
    }

    pub fn counters(&self) -> &RunCounters {
        &self.counters
    }

    /// Record a record that could not even be parsed.
    pub fn note_malformed(&mut self) {
        self.counters.events_ingested += 1;
        self.counters.events_skipped += 1;
    }

    /// Run one event through the tissue. A malformed event (wrong
    /// dimension, non-finite values) is counted as skipped and returned as
    /// an error without touching the map.
    pub fn process_event(&mut self, ev: &RawEvent) -> Result<Option<AntigenEvent>> {
        self.counters.events_ingested += 1;
        match self.step(ev) {
            Ok((emitted, quantization_error)) => {
                let c = &mut self.counters;
                c.events_processed += 1;
                c.epoch_qe_sum += quantization_error;
                c.epoch_qe_count += 1;
                if c.epoch_qe_count == self.epoch_len {
                    c.mqe_per_epoch.push(c.epoch_qe_sum / c.epoch_qe_count as f64);
                    c.epoch_qe_sum = 0.0;
                    c.epoch_qe_count = 0;
                }
                if emitted.is_some() {
                    c.antigens_emitted += 1;
                }
                if let Some(label) = &ev.label {
                    let entry = c.per_label.entry(label.clone()).or_default();
                    entry.events += 1;
                    if emitted.is_some() {
                        entry.emitted += 1;
                    }
                }
                Ok(emitted)
            }
            Err(e) => {
                self.counters.events_skipped += 1;
                Err(e)
            }
        }
    }

    fn step(&mut self, ev: &RawEvent) -> Result<(Option<AntigenEvent>, f64)> {
        let x = self.norm.observe_and_normalize(&ev.features)?;

        let empty = BTreeMap::new();
        let activation = self.ruleset.evaluate(ev.raw.as_ref().unwrap_or(&empty));
        let effect = self.ruleset.effect_of(&activation);

        let (bmu, bmu_distance) = self.map.find_bmu(&x)?;
        let cell = self.map.cell(bmu).expect("BMU is on the grid");
        let inputs = NoveltyInputs {
            bmu_distance,
            bmu_hit_count: cell.hit_count,
            steps_since_bmu_hit: cell.last_hit_step.map(|s| self.map.step() - s),
            map_step: self.map.step(),
        };
        let novelty = novelty_score(&inputs, &self.gate);

        let ctx = AntigenContext {
            ts: ev.ts,
            source: ev.source.clone(),
            bmu,
            active_receptors: activation.names().map(str::to_string).collect(),
            features: x.clone(),
            inflammation_at_bmu: self.field.level_at(bmu),
        };
        let emitted = decide(novelty, &effect, self.map.step(), &self.gate, ctx);

        let report = self.map.train_step(&x, effect.learn_multiplier)?;
        debug_assert_eq!(report.bmu, bmu);

        if let Some(antigen) = &emitted {
            self.field.deposit(bmu, antigen.novelty * (1.0 + antigen.danger))?;
        }
        self.field.step_decay();

        Ok((emitted, bmu_distance))
    }

    /// Current metrics, computed from a quiescent snapshot of the state.
    pub fn metrics(&self) -> RunMetrics {
        let c = &self.counters;
        let mut mqe_per_epoch = c.mqe_per_epoch.clone();
        if c.epoch_qe_count > 0 {
            mqe_per_epoch.push(c.epoch_qe_sum / c.epoch_qe_count as f64);
        }
        let attention = self.field.attention(self.attention_k, self.attention_floor);
        RunMetrics {
            events_ingested: c.events_ingested,
            events_processed: c.events_processed,
            events_skipped: c.events_skipped,
            antigens_emitted: c.antigens_emitted,
            reduction_ratio: if c.events_ingested == 0 {
                0.0
            } else {
                c.antigens_emitted as f64 / c.events_ingested as f64
            },
            epoch_len: self.epoch_len,
            mqe_per_epoch,
            hotspots: attention.hotspots,
            priority_share: attention.priority_share,
            per_label: c.per_label.clone(),
        }
    }
}
