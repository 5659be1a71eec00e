//! Self-describing JSON checkpoints. Floats are written in shortest
//! round-trip form, so a resumed run is bit-identical to an uninterrupted one.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::config::FlowConfig;
use crate::flow::monitor::{MonitorBaseline, MonitorReport};
use crate::flow::FlowState;
use crate::geometry::{HalfSphereGrid, RadialField};

pub const CHECKPOINT_FORMAT: &str = "capflow-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: FlowConfig,
    pub t: f64,
    pub step: u64,
    pub dt_last: f64,
    pub steady_count: usize,
    pub phi: Vec<f64>,
    pub baseline: MonitorBaseline,
    pub monitors: MonitorReport,
}

impl Checkpoint {
    pub fn from_state(state: &FlowState, config: &FlowConfig) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            config: config.clone(),
            t: state.t,
            step: state.step,
            dt_last: state.dt_last,
            steady_count: state.steady_count,
            phi: state.field.phi().to_vec(),
            baseline: state.baseline.clone(),
            monitors: state.monitors.clone(),
        }
    }

    pub fn into_state(self) -> Result<(FlowState, FlowConfig)> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format {:?}",
                self.format
            )));
        }
        self.config.validate()?;
        let grid = HalfSphereGrid::shared(self.config.grid)?;
        let field = RadialField::new(grid, self.phi)?;
        let state = FlowState {
            t: self.t,
            step: self.step,
            dt_last: self.dt_last,
            steady_count: self.steady_count,
            field,
            baseline: self.baseline,
            monitors: self.monitors,
        };
        Ok((state, self.config))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
