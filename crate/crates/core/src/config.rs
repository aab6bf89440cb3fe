use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cells::AdderCellKind;
use crate::error::{Error, Result};
use crate::imaging::BlendMode;
use crate::learner::Quantizer;
use crate::mularray::{ArrayTopology, MultiplierConfig};

/// Everything that parameterizes one pipeline run. Echoed into every artifact
/// the pipeline writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cell: AdderCellKind,
    pub width: u32,
    pub approx_columns: u32,
    #[serde(default)]
    pub topology: ArrayTopology,
    pub clusters: u32,
    pub mode: BlendMode,
    pub seed: u64,
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MultiplierConfig::baseline();
        RunConfig {
            cell: m.cell_kind,
            width: m.width,
            approx_columns: m.approx_columns,
            topology: m.topology,
            clusters: 16,
            mode: BlendMode::CompComponent,
            seed: 2019,
            profile: None,
            model: None,
            out: None,
            inputs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn multiplier(&self) -> MultiplierConfig {
        MultiplierConfig {
            width: self.width,
            approx_columns: self.approx_columns,
            cell_kind: self.cell,
            topology: self.topology,
        }
    }

    pub fn quantizer(&self) -> Result<Quantizer> {
        Quantizer::new(self.clusters, self.width)
    }

    pub fn validate(&self) -> Result<()> {
        self.multiplier().validate()?;
        self.quantizer()?;
        if !self.inputs.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "image inputs come in pairs, got {}",
                self.inputs.len()
            )));
        }
        Ok(())
    }
}
