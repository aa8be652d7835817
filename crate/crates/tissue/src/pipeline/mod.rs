//! The event-stream plumbing around the tissue: ingestion, normalization,
//! featurization, the per-event processing loop, synthetic data, metrics
//! and snapshots.

mod config;
mod engine;
pub mod featurize;
mod io;
mod normalize;
mod snapshot;
pub mod synth;

pub use config::{GridConfig, InflammationConfig, IoConfig, MetricsConfig, PipelineConfig};
pub use engine::{LabelCounts, Pipeline, RunCounters, RunMetrics};
pub use io::{detect_format, read_events, write_antigen, InputFormat};
pub use normalize::NormState;
pub use snapshot::{Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use synth::{ClusterSpec, SynthConfig};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::receptor::RawValue;

/// One incoming event: a numeric feature vector for the map plus an
/// optional named raw-feature map for the receptors. `label` is carried
/// through for evaluation streams and never influences processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub ts: i64,
    pub source: String,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<BTreeMap<String, RawValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}
