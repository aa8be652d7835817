//! Versioned persistence of the full mutable pipeline state.
//!
//! A snapshot restores the map (weights, statistics, step counter), the
//! normalization ranges, the inflammation field and the run counters
//! exactly, so a resumed run emits the same antigens as an unbroken one.
//! The JSON document opens with a magic string and a version integer;
//! anything that fails those checks, or whose contents violate structural
//! invariants, is rejected with a reason.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inflammation::InflammationField;
use crate::pipeline::config::GridConfig;
use crate::pipeline::engine::RunCounters;
use crate::pipeline::normalize::NormState;
use crate::som::TissueMap;

pub const SNAPSHOT_MAGIC: &str = "tissue-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub magic: String,
    pub version: u32,
    pub map: TissueMap,
    pub norm: NormState,
    pub field: InflammationField,
    pub counters: RunCounters,
}

impl Snapshot {
    pub(crate) fn capture(
        map: TissueMap,
        norm: NormState,
        field: InflammationField,
        counters: RunCounters,
    ) -> Self {
        Snapshot { magic: SNAPSHOT_MAGIC.to_string(), version: SNAPSHOT_VERSION, map, norm, field, counters }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::snapshot(format!("cannot write {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, self)
            .map_err(|e| Error::snapshot(format!("cannot serialize snapshot: {e}")))?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::snapshot(format!("cannot read {}: {e}", path.display())))?;
        let snapshot: Snapshot = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::snapshot(format!("{} is corrupt: {e}", path.display())))?;
        if snapshot.magic != SNAPSHOT_MAGIC {
            return Err(Error::snapshot(format!(
                "{} is not a tissue snapshot (magic '{}')",
                path.display(),
                snapshot.magic
            )));
        }
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::snapshot(format!(
                "{} has snapshot version {}, expected {SNAPSHOT_VERSION}",
                path.display(),
                snapshot.version
            )));
        }
        snapshot.map.validate()?;
        snapshot.norm.validate()?;
        snapshot.field.validate()?;
        Ok(snapshot)
    }

    /// A snapshot can only resume a run whose grid matches its own.
    pub(crate) fn check_compatible(&self, grid: &GridConfig) -> Result<()> {
        if self.map.width() != grid.width
            || self.map.height() != grid.height
            || self.map.dim() != grid.dim
        {
            return Err(Error::snapshot(format!(
                "snapshot grid is {}x{} dim {}, config expects {}x{} dim {}",
                self.map.width(),
                self.map.height(),
                self.map.dim(),
                grid.width,
                grid.height,
                grid.dim
            )));
        }
        if self.field.width() != grid.width || self.field.height() != grid.height {
            return Err(Error::snapshot("snapshot field does not match the grid".to_string()));
        }
        if self.norm.dim() != grid.dim {
            return Err(Error::snapshot("snapshot normalization state does not match the grid".to_string()));
        }
        Ok(())
    }
}
