//! A streaming pre-processor that models "normal" system behaviour on an
//! online self-organizing map and forwards only the interesting events.
//!
//! Raw events flow through five stages, one event at a time:
//!
//! 1. **normalize** — online min-max scaling of the numeric features into
//!    the map's `[0,1]` domain ([`pipeline::NormState`]);
//! 2. **receptors** — named predicates over the raw feature map; firing
//!    combinations amplify learning and carry a danger score
//!    ([`receptor::TlrRuleSet`]);
//! 3. **map lookup** — best-matching-unit search against the grid as it
//!    stands, before this event reshapes it ([`som::TissueMap`]);
//! 4. **gate** — a bounded novelty score plus the emission decision; only
//!    novel or dangerous events become antigens ([`gate`]);
//! 5. **inflammation** — emitted events heat a decaying field over the
//!    grid, summarized as advisory attention hotspots
//!    ([`inflammation::InflammationField`]).
//!
//! The [`pipeline::Pipeline`] owns all mutable state and runs the stages
//! in a strict order per event, so a whole run is a deterministic function
//! of `(config, seed, input)`. Snapshots persist everything mid-stream.

pub mod error;
pub mod gate;
pub mod inflammation;
pub mod pipeline;
pub mod receptor;
pub mod som;

pub use error::{Error, Result};
pub use gate::{decide, novelty_score, AntigenContext, AntigenEvent, GateConfig, NoveltyInputs};
pub use inflammation::{AttentionReport, Hotspot, InflammationField};
pub use pipeline::{Pipeline, PipelineConfig, RawEvent, RunMetrics, Snapshot};
pub use receptor::{ActivationSet, ComboRule, Predicate, RawValue, ReceptorSpec, TlrEffect, TlrRuleSet};
pub use som::{Cell, FeatureVector, GridCoord, Schedule, TissueMap, UpdateReport};
