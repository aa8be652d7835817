//! The single JSON configuration document for a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::GateConfig;
use crate::pipeline::synth::SynthConfig;
use crate::receptor::TlrRuleSet;
use crate::som::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InflammationConfig {
    pub decay: f64,
    pub cap: f64,
    pub spread_sigma: f64,
    /// Hotspot count reported by attention summaries.
    pub attention_k: usize,
    /// Minimum level for a cell to count as a hotspot.
    pub attention_floor: f64,
}

impl Default for InflammationConfig {
    fn default() -> Self {
        InflammationConfig { decay: 0.95, cap: 1.0, spread_sigma: 1.0, attention_k: 5, attention_floor: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Events per quantization-error epoch in the metrics report.
    pub epoch_len: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { epoch_len: 1000 }
    }
}

/// Default I/O locations; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IoConfig {
    pub input: Option<String>,
    pub out: Option<String>,
    pub metrics: Option<PathBuf>,
    pub grid_dump: Option<PathBuf>,
    pub field_dump: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
    pub snapshot_in: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub schedule: Schedule,
    pub gate: GateConfig,
    #[serde(default)]
    pub receptors: TlrRuleSet,
    #[serde(default)]
    pub inflammation: InflammationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub io: IoConfig,
}

impl PipelineConfig {
    /// Load and validate a configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.width < 1 || self.grid.height < 1 || self.grid.dim < 1 {
            return Err(Error::config(format!(
                "grid dimensions must all be >= 1, got {}x{} dim {}",
                self.grid.width, self.grid.height, self.grid.dim
            )));
        }
        self.schedule.validate()?;
        self.gate.validate()?;
        self.receptors.validate()?;
        let inf = &self.inflammation;
        if !(inf.decay > 0.0 && inf.decay < 1.0) {
            return Err(Error::config(format!("inflammation.decay must be in (0,1), got {}", inf.decay)));
        }
        if !(inf.cap.is_finite() && inf.cap > 0.0) {
            return Err(Error::config(format!("inflammation.cap must be positive, got {}", inf.cap)));
        }
        if !(inf.spread_sigma.is_finite() && inf.spread_sigma >= 0.0) {
            return Err(Error::config(format!(
                "inflammation.spread_sigma must be >= 0, got {}",
                inf.spread_sigma
            )));
        }
        if inf.attention_k < 1 {
            return Err(Error::config("inflammation.attention_k must be >= 1".to_string()));
        }
        if !(inf.attention_floor.is_finite() && inf.attention_floor >= 0.0) {
            return Err(Error::config(format!(
                "inflammation.attention_floor must be >= 0, got {}",
                inf.attention_floor
            )));
        }
        if self.metrics.epoch_len < 1 {
            return Err(Error::config("metrics.epoch_len must be >= 1".to_string()));
        }
        if let Some(synth) = &self.synth {
            synth.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"width": 4, "height": 4, "dim": 2},
        "gate": {
            "distance_scale": 0.2,
            "rarity_weight": 0.3,
            "emit_threshold": 0.6,
            "danger_override": 0.9,
            "warmup_steps": 100
        }
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = PipelineConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.schedule, Schedule::default());
        assert_eq!(cfg.metrics.epoch_len, 1000);
        assert_eq!(cfg.inflammation.attention_k, 5);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.synth.is_none());
        assert!(cfg.receptors.receptors().is_empty());
    }

    #[test]
    fn bad_grid_rejected() {
        let text = MINIMAL.replace("\"width\": 4", "\"width\": 0");
        assert!(matches!(PipelineConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn bad_gate_rejected() {
        let text = MINIMAL.replace("\"emit_threshold\": 0.6", "\"emit_threshold\": 1.4");
        assert!(PipelineConfig::from_json(&text).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = PipelineConfig::from_path(Path::new("/nonexistent/conf.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/conf.json"));
        assert!(matches!(err, Error::Config(_)));
    }
}
