use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::learner::{build_table, train_tree, CompensationTable, CompensationTree, Quantizer};
use crate::persist;
use crate::profiler::ErrorProfile;

/// Quantizer, lookup table and tree for one multiplier configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompensationModel {
    quantizer: Quantizer,
    table: CompensationTable,
    tree: CompensationTree,
}

impl CompensationModel {
    pub fn new(
        quantizer: Quantizer,
        table: CompensationTable,
        tree: CompensationTree,
    ) -> Result<Self> {
        let k = quantizer.cluster_count();
        if table.clusters() != k || tree.clusters() != k {
            return Err(Error::Dimension(format!(
                "quantizer has {k} clusters, table {}, tree {}",
                table.clusters(),
                tree.clusters()
            )));
        }
        tree.validate()?;
        Ok(CompensationModel {
            quantizer,
            table,
            tree,
        })
    }

    /// Builds the table from `profile` and fits the tree to it.
    pub fn train(profile: &ErrorProfile, quantizer: Quantizer) -> Result<Self> {
        let table = build_table(profile, &quantizer)?;
        let tree = train_tree(&table);
        CompensationModel::new(quantizer, table, tree)
    }

    /// Predicts zero for every pair.
    pub fn zero(quantizer: Quantizer) -> Self {
        let k = quantizer.cluster_count();
        CompensationModel {
            quantizer,
            table: CompensationTable::zeros(k),
            tree: CompensationTree::zero(k),
        }
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn table(&self) -> &CompensationTable {
        &self.table
    }

    pub fn tree(&self) -> &CompensationTree {
        &self.tree
    }

    /// Tree prediction for raw operands.
    pub fn predict_operands(&self, a: u32, b: u32) -> Result<i32> {
        let i = self.quantizer.quantize(a)?;
        let j = self.quantizer.quantize(b)?;
        Ok(self.tree.predict_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, a: u32, b: u32) -> i32 {
        self.tree
            .predict_unchecked(self.quantizer.index(a), self.quantizer.index(b))
    }
}

/// On-disk body of a model file. The file itself is the usual header line
/// followed by this record as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub quantizer: Quantizer,
    pub table: CompensationTable,
    pub tree: CompensationTree,
}

pub fn export_model(model: &CompensationModel, config: &RunConfig) -> String {
    let body = ModelFile {
        quantizer: model.quantizer,
        table: model.table.clone(),
        tree: model.tree.clone(),
    };
    let mut s = persist::header_line("model", config);
    s.push_str(&serde_json::to_string_pretty(&body).expect("model serializes"));
    s.push('\n');
    s
}

/// Parses a model file. `path` is only used in diagnostics.
pub fn import_model(bytes: &[u8], path: &Path) -> Result<(CompensationModel, RunConfig)> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| Error::parse(path, 1, format!("not UTF-8: {e}")))?;
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let config = persist::parse_header(path, Some((1, first)), "model")?;
    let file: ModelFile = serde_json::from_str(body)
        .map_err(|e| Error::parse(path, e.line() + 1, format!("column {}: {e}", e.column())))?;
    let q = Quantizer::new(file.quantizer.cluster_count(), file.quantizer.width())?;
    let table = CompensationTable::new(file.table.clusters(), file.table.values().to_vec())?;
    let tree = CompensationTree::new(file.tree.clusters(), file.tree.root().clone())?;
    Ok((CompensationModel::new(q, table, tree)?, config))
}

impl CompensationModel {
    pub fn save(&self, path: &Path, config: &RunConfig) -> Result<()> {
        persist::write_atomic(path, export_model(self, config).as_bytes())
    }

    pub fn load(path: &Path) -> Result<(CompensationModel, RunConfig)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        import_model(&bytes, path)
    }
}
